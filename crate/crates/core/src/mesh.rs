//! Triangular meshes: topology, validation, adjacency, plain-text IO, and a
//! regular triangulation of masked image grids so one SPDE code path serves
//! both pixel slices and genuine surface meshes.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// 2-D triangular mesh with vertices indexed 0..L.
#[derive(Debug, Clone)]
pub struct TriangularMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangularMesh {
    /// Validates index ranges, strictly positive triangle areas, and
    /// connectivity.
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriangularMesh { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    fn validate(&self) -> Result<()> {
        let l = self.vertices.len();
        if l < 3 || self.triangles.is_empty() {
            return Err(Error::Mesh("mesh needs at least one triangle".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= l {
                    return Err(Error::Mesh(format!("triangle {t} references vertex {v} >= {l}")));
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {t} has repeated vertices")));
            }
            let area = self.triangle_area(t);
            if !(area > 1e-14) {
                return Err(Error::Mesh(format!("triangle {t} is degenerate (area {area})")));
            }
        }
        // Every vertex must sit in some triangle and the mesh must be
        // connected, otherwise the FEM operators are singular.
        let mut used = vec![false; l];
        for tri in &self.triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        if used.iter().any(|u| !u) {
            return Err(Error::Mesh("mesh has isolated vertices".into()));
        }
        let adj = self.neighbor_lists();
        let mut seen = vec![false; l];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        if count != l {
            return Err(Error::Mesh(format!("mesh is disconnected ({count} of {l} reachable)")));
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Signed-area magnitude of triangle `t`.
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])).abs()
    }

    /// Edge-adjacency neighbor lists (sorted, no self loops).
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<HashSet<usize>> = vec![HashSet::new(); self.vertices.len()];
        for tri in &self.triangles {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                sets[tri[a]].insert(tri[b]);
                sets[tri[b]].insert(tri[a]);
            }
        }
        sets.into_iter()
            .map(|s| {
                let mut v: Vec<usize> = s.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect()
    }

    /// Median mesh edge length; the default spatial range baseline is a
    /// small multiple of this.
    pub fn median_edge_length(&self) -> f64 {
        let mut edges = HashSet::new();
        for tri in &self.triangles {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let (i, j) = (tri[a].min(tri[b]), tri[a].max(tri[b]));
                edges.insert((i, j));
            }
        }
        let mut lens: Vec<f64> = edges
            .into_iter()
            .map(|(i, j)| {
                let p = self.vertices[i];
                let q = self.vertices[j];
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            })
            .collect();
        lens.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = lens.len();
        if m % 2 == 1 {
            lens[m / 2]
        } else {
            0.5 * (lens[m / 2 - 1] + lens[m / 2])
        }
    }

    /// Euclidean distance between two vertices.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let p = self.vertices[i];
        let q = self.vertices[j];
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
    }

    /// Plain-text serialization: header `L n_triangles`, then `x y` vertex
    /// lines, then 0-based `i j k` triangle lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.vertices.len(), self.triangles.len()));
        for v in &self.vertices {
            out.push_str(&format!("{} {}\n", v[0], v[1]));
        }
        for t in &self.triangles {
            out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(Error::Parse("mesh header must be 'L n_triangles'".into()));
        }
        let l: usize = parts[0].parse().map_err(|_| Error::Parse("bad vertex count".into()))?;
        let nt: usize = parts[1].parse().map_err(|_| Error::Parse("bad triangle count".into()))?;
        let mut vertices = Vec::with_capacity(l);
        for _ in 0..l {
            let line = lines.next().ok_or_else(|| Error::Parse("truncated vertex list".into()))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 2 {
                return Err(Error::Parse(format!("bad vertex line {line:?}")));
            }
            vertices.push([
                f[0].parse().map_err(|_| Error::Parse("bad vertex coordinate".into()))?,
                f[1].parse().map_err(|_| Error::Parse("bad vertex coordinate".into()))?,
            ]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let line = lines.next().ok_or_else(|| Error::Parse("truncated triangle list".into()))?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("bad triangle line {line:?}")));
            }
            triangles.push([
                f[0].parse().map_err(|_| Error::Parse("bad triangle index".into()))?,
                f[1].parse().map_err(|_| Error::Parse("bad triangle index".into()))?,
                f[2].parse().map_err(|_| Error::Parse("bad triangle index".into()))?,
            ]);
        }
        TriangularMesh::new(vertices, triangles)
    }

    /// Uniformly triangulated unit square with `(n+1)²` vertices, used by the
    /// validation experiments.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Mesh("unit square needs n >= 1 cells per side".into()));
        }
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for r in 0..=n {
            for c in 0..=n {
                vertices.push([c as f64 / n as f64, r as f64 / n as f64]);
            }
        }
        let idx = |r: usize, c: usize| r * (n + 1) + c;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for r in 0..n {
            for c in 0..n {
                triangles.push([idx(r, c), idx(r, c + 1), idx(r + 1, c)]);
                triangles.push([idx(r, c + 1), idx(r + 1, c + 1), idx(r + 1, c)]);
            }
        }
        TriangularMesh::new(vertices, triangles)
    }
}

/// A masked image grid triangulated at pixel centers (unit spacing). Keeps
/// the largest connected component; `vertex_of_pixel` maps `row * ncols +
/// col` to the mesh vertex index, if retained.
#[derive(Debug, Clone)]
pub struct GridMesh {
    pub mesh: TriangularMesh,
    pub nrows: usize,
    pub ncols: usize,
    pub vertex_of_pixel: Vec<Option<usize>>,
    /// `pixel_of_vertex[v] = (row, col)`.
    pub pixel_of_vertex: Vec<(usize, usize)>,
}

impl GridMesh {
    /// Triangulate the `true` pixels of a row-major mask. Every 2×2 block of
    /// masked pixels contributes two triangles.
    pub fn from_mask(mask: &[bool], nrows: usize, ncols: usize) -> Result<Self> {
        if mask.len() != nrows * ncols {
            return Err(Error::dims(format!(
                "mask length {} != {nrows}x{ncols}",
                mask.len()
            )));
        }
        let at = |r: usize, c: usize| mask[r * ncols + c];

        // Provisional vertex ids for all masked pixels.
        let mut provisional = vec![None; nrows * ncols];
        let mut coords = Vec::new();
        for r in 0..nrows {
            for c in 0..ncols {
                if at(r, c) {
                    provisional[r * ncols + c] = Some(coords.len());
                    coords.push((r, c));
                }
            }
        }
        let mut tris = Vec::new();
        for r in 0..nrows.saturating_sub(1) {
            for c in 0..ncols.saturating_sub(1) {
                if at(r, c) && at(r, c + 1) && at(r + 1, c) && at(r + 1, c + 1) {
                    let a = provisional[r * ncols + c].unwrap();
                    let b = provisional[r * ncols + c + 1].unwrap();
                    let d = provisional[(r + 1) * ncols + c].unwrap();
                    let e = provisional[(r + 1) * ncols + c + 1].unwrap();
                    tris.push([a, b, d]);
                    tris.push([b, e, d]);
                }
            }
        }
        if tris.is_empty() {
            return Err(Error::Mesh("mask contains no 2x2 block of pixels".into()));
        }

        // Largest connected component over triangle-induced edges.
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); coords.len()];
        for tri in &tris {
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                adj[tri[a]].push(tri[b]);
                adj[tri[b]].push(tri[a]);
            }
        }
        let mut comp = vec![usize::MAX; coords.len()];
        let mut comp_sizes = Vec::new();
        for start in 0..coords.len() {
            if comp[start] != usize::MAX || adj[start].is_empty() {
                continue;
            }
            let id = comp_sizes.len();
            let mut size = 0;
            let mut stack = vec![start];
            comp[start] = id;
            while let Some(u) = stack.pop() {
                size += 1;
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        stack.push(v);
                    }
                }
            }
            comp_sizes.push(size);
        }
        let keep = comp_sizes
            .iter()
            .enumerate()
            .max_by_key(|(_, &s)| s)
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Mesh("mask has no connected triangulated region".into()))?;

        let mut remap = vec![None; coords.len()];
        let mut vertices = Vec::new();
        let mut pixel_of_vertex = Vec::new();
        for (old, &(r, c)) in coords.iter().enumerate() {
            if comp[old] == keep {
                remap[old] = Some(vertices.len());
                // x = column, y = row; unit pixel spacing
                vertices.push([c as f64, r as f64]);
                pixel_of_vertex.push((r, c));
            }
        }
        let triangles: Vec<[usize; 3]> = tris
            .into_iter()
            .filter_map(|t| {
                Some([remap[t[0]]?, remap[t[1]]?, remap[t[2]]?])
            })
            .collect();

        let mut vertex_of_pixel = vec![None; nrows * ncols];
        for (v, &(r, c)) in pixel_of_vertex.iter().enumerate() {
            vertex_of_pixel[r * ncols + c] = Some(v);
        }

        Ok(GridMesh {
            mesh: TriangularMesh::new(vertices, triangles)?,
            nrows,
            ncols,
            vertex_of_pixel,
            pixel_of_vertex,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.mesh.n_vertices()
    }
}
