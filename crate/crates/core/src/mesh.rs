//! Conforming triangular meshes of a partitioned fluid/solid domain.
//!
//! A [`Mesh`] is immutable once built. Facets are numbered in order of first
//! appearance while walking the triangles and their local edges, so the
//! numbering is a pure function of the vertex and triangle arrays.
//!
//! Local edge `i` of a triangle is the edge opposite local vertex `i`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Name given to the set of facets on the fluid/solid interface.
pub const INTERFACE_LABEL: &str = "sigma";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subdomain {
    Solid,
    Fluid,
}

impl Subdomain {
    pub fn tag(self) -> char {
        match self {
            Subdomain::Solid => 's',
            Subdomain::Fluid => 'f',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FacetKind {
    Interior,
    Boundary,
    /// Interior facet whose two neighbours belong to different subdomains.
    Interface,
}

/// (element, local edge) pair.
pub type Side = (usize, usize);

#[derive(Debug, Clone)]
pub struct Facet {
    /// Global vertex indices, smaller index first.
    pub vertices: [usize; 2],
    pub kind: FacetKind,
    /// The neighbour with the lower element index comes first.
    pub sides: [Option<Side>; 2],
}

impl Facet {
    pub fn first(&self) -> Side {
        self.sides[0].expect("every facet has at least one neighbour")
    }

    pub fn is_boundary(&self) -> bool {
        self.kind == FacetKind::Boundary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLabel {
    pub name: String,
    pub facets: Vec<usize>,
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    subdomains: Vec<Subdomain>,
    facets: Vec<Facet>,
    element_facets: Vec<[usize; 3]>,
    labels: Vec<BoundaryLabel>,
    facet_labels: Vec<Option<usize>>,
}

impl Mesh {
    /// Builds the facet structure of a triangulation.
    ///
    /// Triangles must be given with counter-clockwise orientation.
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        subdomains: Vec<Subdomain>,
    ) -> Result<Self> {
        if triangles.len() != subdomains.len() {
            return Err(Error::Mesh(format!(
                "{} triangles but {} subdomain tags",
                triangles.len(),
                subdomains.len()
            )));
        }
        for (e, tri) in triangles.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!(
                    "triangle {e} references vertex {v} of {}",
                    vertices.len()
                )));
            }
            let area = signed_area(&vertices, tri);
            if area <= 0.0 {
                return Err(Error::Mesh(format!(
                    "triangle {e} has non-positive signed area {area:e}"
                )));
            }
        }

        let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut element_facets = Vec::with_capacity(triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            let mut ids = [0; 3];
            for (i, id) in ids.iter_mut().enumerate() {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let key = [a.min(b), a.max(b)];
                *id = match lookup.get(&key) {
                    Some(&f) => {
                        let facet = &mut facets[f];
                        if facet.sides[1].is_some() {
                            return Err(Error::Mesh(format!(
                                "edge ({}, {}) shared by more than two triangles",
                                key[0], key[1]
                            )));
                        }
                        facet.sides[1] = Some((e, i));
                        f
                    }
                    None => {
                        let f = facets.len();
                        facets.push(Facet {
                            vertices: key,
                            kind: FacetKind::Boundary,
                            sides: [Some((e, i)), None],
                        });
                        lookup.insert(key, f);
                        f
                    }
                };
            }
            element_facets.push(ids);
        }
        for facet in &mut facets {
            facet.kind = match facet.sides {
                [Some(_), None] => FacetKind::Boundary,
                [Some((a, _)), Some((b, _))] if subdomains[a] != subdomains[b] => {
                    FacetKind::Interface
                }
                _ => FacetKind::Interior,
            };
        }
        let facet_labels = vec![None; facets.len()];
        let mut mesh = Mesh {
            vertices,
            triangles,
            subdomains,
            facets,
            element_facets,
            labels: Vec::new(),
            facet_labels,
        };
        mesh.label_interface();
        Ok(mesh)
    }

    fn label_interface(&mut self) {
        let facets: Vec<usize> = (0..self.facets.len())
            .filter(|&f| self.facets[f].kind == FacetKind::Interface)
            .collect();
        if facets.is_empty() {
            return;
        }
        let id = self.labels.len();
        for &f in &facets {
            self.facet_labels[f] = Some(id);
        }
        self.labels.push(BoundaryLabel {
            name: INTERFACE_LABEL.to_string(),
            facets,
        });
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn subdomains(&self) -> &[Subdomain] {
        &self.subdomains
    }

    pub fn subdomain(&self, element: usize) -> Subdomain {
        self.subdomains[element]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, f: usize) -> &Facet {
        &self.facets[f]
    }

    pub fn element_facets(&self, element: usize) -> [usize; 3] {
        self.element_facets[element]
    }

    pub fn num_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn labels(&self) -> &[BoundaryLabel] {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&BoundaryLabel> {
        self.labels.iter().find(|l| l.name == name)
    }

    /// Label name carried by facet `f`, if any.
    pub fn facet_label(&self, f: usize) -> Option<&str> {
        self.facet_labels[f].map(|i| self.labels[i].name.as_str())
    }

    pub fn element_vertices(&self, element: usize) -> [Point; 3] {
        let t = self.triangles[element];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn element_area(&self, element: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[element])
    }

    pub fn centroid(&self, element: usize) -> Point {
        let [a, b, c] = self.element_vertices(element);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Diameter of a triangle, i.e. its longest edge.
    pub fn element_diameter(&self, element: usize) -> f64 {
        self.element_facets[element]
            .iter()
            .map(|&f| self.facet_length(f))
            .fold(0.0, f64::max)
    }

    pub fn facet_endpoints(&self, f: usize) -> [Point; 2] {
        let [a, b] = self.facets[f].vertices;
        [self.vertices[a], self.vertices[b]]
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facet_endpoints(f);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn facet_midpoint(&self, f: usize) -> Point {
        let [a, b] = self.facet_endpoints(f);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    pub fn affine(&self, element: usize) -> AffineMap {
        AffineMap::new(self.element_vertices(element))
    }

    /// Whether local edge `edge` of `element` runs in the same direction as
    /// its facet (from the smaller to the larger global vertex index).
    pub fn edge_aligned(&self, element: usize, edge: usize) -> bool {
        let t = self.triangles[element];
        let f = self.element_facets[element][edge];
        t[(edge + 1) % 3] == self.facets[f].vertices[0]
    }

    /// Unit normal of local edge `edge` of `element`, pointing out of the element.
    pub fn outward_normal(&self, element: usize, edge: usize) -> Point {
        let t = self.triangles[element];
        let a = self.vertices[t[(edge + 1) % 3]];
        let b = self.vertices[t[(edge + 2) % 3]];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        // counter-clockwise orientation puts the exterior on the right
        [dy / len, -dx / len]
    }

    /// Reference normal of a facet: outward for boundary facets, otherwise
    /// pointing from the lower-indexed neighbour into the higher one.
    pub fn facet_normal(&self, f: usize) -> Point {
        let (e, i) = self.facets[f].first();
        self.outward_normal(e, i)
    }

    /// Mesh size `h`: the largest element diameter.
    pub fn h(&self) -> f64 {
        (0..self.num_elements())
            .map(|e| self.element_diameter(e))
            .fold(0.0, f64::max)
    }

    /// Smallest `gamma` with `h_F <= h_K <= gamma h_F` for all facets `F` of every `K`.
    pub fn quasi_uniformity(&self) -> f64 {
        let mut gamma: f64 = 1.0;
        for e in 0..self.num_elements() {
            let hk = self.element_diameter(e);
            for &f in &self.element_facets[e] {
                gamma = gamma.max(hk / self.facet_length(f));
            }
        }
        gamma
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.element_area(e)).sum()
    }

    pub fn count_facets(&self, kind: FacetKind) -> usize {
        self.facets.iter().filter(|f| f.kind == kind).count()
    }

    /// Element containing `p` (closed triangles, first match by index).
    pub fn locate(&self, p: Point) -> Option<usize> {
        const TOL: f64 = 1e-12;
        (0..self.num_elements()).find(|&e| {
            let [a, b, c] = self.element_vertices(e);
            let area = self.element_area(e);
            let l0 = orient(b, c, p) / area;
            let l1 = orient(c, a, p) / area;
            let l2 = orient(a, b, p) / area;
            l0 >= -TOL && l1 >= -TOL && l2 >= -TOL
        })
    }

    /// Assigns every boundary facet to exactly one named label.
    ///
    /// Predicates are evaluated at facet midpoints. Interface facets keep the
    /// `sigma` label and are never offered to the predicates.
    pub fn classify_facets(mut self, labels: &[(&str, &dyn Fn(Point) -> bool)]) -> Result<Self> {
        let mut uncovered = Vec::new();
        let mut doubly = Vec::new();
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); labels.len()];
        for (f, facet) in self.facets.iter().enumerate() {
            if !facet.is_boundary() {
                continue;
            }
            let m = self.facet_midpoint(f);
            let hits: Vec<usize> = (0..labels.len()).filter(|&i| (labels[i].1)(m)).collect();
            match hits.as_slice() {
                [] => uncovered.push(m),
                [i] => sets[*i].push(f),
                _ => doubly.push(m),
            }
        }
        if !uncovered.is_empty() || !doubly.is_empty() {
            let mut msg = String::new();
            if !uncovered.is_empty() {
                let _ = write!(msg, "unlabelled boundary facets at midpoints {}", fmt_points(&uncovered));
            }
            if !doubly.is_empty() {
                if !msg.is_empty() {
                    msg.push_str("; ");
                }
                let _ = write!(msg, "facets matched by several labels at midpoints {}", fmt_points(&doubly));
            }
            return Err(Error::Labels(msg));
        }
        self.labels.retain(|l| l.name == INTERFACE_LABEL);
        self.facet_labels.iter_mut().for_each(|l| *l = None);
        if let Some(sigma) = self.labels.first() {
            for &f in &sigma.facets {
                self.facet_labels[f] = Some(0);
            }
        }
        for ((name, _), facets) in labels.iter().zip(sets) {
            if *name == INTERFACE_LABEL {
                return Err(Error::Labels(format!("label name `{INTERFACE_LABEL}` is reserved")));
            }
            if self.label(name).is_some() {
                return Err(Error::Labels(format!("duplicate label `{name}`")));
            }
            let id = self.labels.len();
            for &f in &facets {
                self.facet_labels[f] = Some(id);
            }
            self.labels.push(BoundaryLabel {
                name: name.to_string(),
                facets,
            });
        }
        Ok(self)
    }

    /// Writes the ASCII `hdgfsi-mesh v1` format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_ascii()).map_err(|e| Error::io(path, e))
    }

    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        out.push_str("hdgfsi-mesh v1\n");
        let _ = writeln!(out, "{} {}", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            let _ = writeln!(out, "{:.16e} {:.16e}", v[0], v[1]);
        }
        for (t, s) in self.triangles.iter().zip(&self.subdomains) {
            let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], s.tag());
        }
        for label in &self.labels {
            if label.name == INTERFACE_LABEL {
                continue;
            }
            let _ = writeln!(out, "label {} {}", label.name, label.facets.len());
            for &f in &label.facets {
                let [a, b] = self.facets[f].vertices;
                let _ = writeln!(out, "{a} {b}");
            }
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ascii(&text, path)
    }

    pub fn from_ascii(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::MeshParse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (n, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        if header != "hdgfsi-mesh v1" {
            return Err(err(n, format!("malformed header `{header}`")));
        }
        let (n, counts) = lines.next().ok_or_else(|| err(n + 1, "missing counts line".into()))?;
        let counts: Vec<usize> = parse_fields(counts).map_err(|m| err(n, m))?;
        let &[nv, nt] = counts.as_slice() else {
            return Err(err(n, "expected `<nv> <nt>`".into()));
        };

        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (n, l) = lines.next().ok_or_else(|| err(0, "unexpected end of vertex list".into()))?;
            let xy: Vec<f64> = parse_fields(l).map_err(|m| err(n, m))?;
            let &[x, y] = xy.as_slice() else {
                return Err(err(n, "expected `x y`".into()));
            };
            vertices.push([x, y]);
        }

        let mut triangles = Vec::with_capacity(nt);
        let mut subdomains = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (n, l) = lines.next().ok_or_else(|| err(0, "unexpected end of triangle list".into()))?;
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(err(n, "expected `i0 i1 i2 tag`".into()));
            }
            let mut tri = [0usize; 3];
            for (slot, p) in tri.iter_mut().zip(&parts[..3]) {
                *slot = p.parse().map_err(|_| err(n, format!("bad vertex index `{p}`")))?;
                if *slot >= nv {
                    return Err(err(n, format!("vertex index out of range ({} of {nv})", *slot)));
                }
            }
            let tag = match parts[3] {
                "s" => Subdomain::Solid,
                "f" => Subdomain::Fluid,
                other => return Err(err(n, format!("unknown subdomain tag `{other}`"))),
            };
            if signed_area(&vertices, &tri) <= 0.0 {
                return Err(err(n, "triangle has non-positive area".into()));
            }
            triangles.push(tri);
            subdomains.push(tag);
        }

        let mut raw_labels: Vec<(String, Vec<([usize; 2], usize)>)> = Vec::new();
        while let Some((n, l)) = lines.next() {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let ["label", name, count] = parts.as_slice() else {
                return Err(err(n, format!("expected `label <name> <count>`, found `{l}`")));
            };
            let count: usize = count.parse().map_err(|_| err(n, format!("bad count `{count}`")))?;
            let mut pairs = Vec::with_capacity(count);
            for _ in 0..count {
                let (m, l) = lines.next().ok_or_else(|| err(n, "unexpected end of label block".into()))?;
                let ab: Vec<usize> = parse_fields(l).map_err(|msg| err(m, msg))?;
                let &[a, b] = ab.as_slice() else {
                    return Err(err(m, "expected a vertex pair".into()));
                };
                if a >= nv || b >= nv {
                    return Err(err(m, "vertex index out of range".into()));
                }
                pairs.push(([a.min(b), a.max(b)], m));
            }
            raw_labels.push((name.to_string(), pairs));
        }

        let mut mesh = Mesh::new(vertices, triangles, subdomains).map_err(|e| err(0, e.to_string()))?;
        let lookup: HashMap<[usize; 2], usize> = mesh
            .facets
            .iter()
            .enumerate()
            .map(|(f, facet)| (facet.vertices, f))
            .collect();
        for (name, pairs) in raw_labels {
            let id = mesh.labels.len();
            let mut facets = Vec::with_capacity(pairs.len());
            for (key, line) in pairs {
                let f = *lookup
                    .get(&key)
                    .ok_or_else(|| err(line, format!("({}, {}) is not a mesh edge", key[0], key[1])))?;
                if mesh.facet_labels[f].is_some() {
                    return Err(err(line, "facet already carries a label".into()));
                }
                mesh.facet_labels[f] = Some(id);
                facets.push(f);
            }
            mesh.labels.push(BoundaryLabel { name, facets });
        }
        Ok(mesh)
    }

    /// Human-readable summary used by `hdg-fsi mesh info`.
    pub fn info(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices   {}", self.vertices.len());
        let _ = writeln!(s, "triangles  {}", self.num_elements());
        let solid = self.subdomains.iter().filter(|&&d| d == Subdomain::Solid).count();
        let _ = writeln!(s, "  solid    {solid}");
        let _ = writeln!(s, "  fluid    {}", self.num_elements() - solid);
        let _ = writeln!(s, "facets     {}", self.num_facets());
        let _ = writeln!(s, "  interior {}", self.count_facets(FacetKind::Interior));
        let _ = writeln!(s, "  boundary {}", self.count_facets(FacetKind::Boundary));
        let _ = writeln!(s, "  interface {}", self.count_facets(FacetKind::Interface));
        let _ = writeln!(s, "h          {:.6e}", self.h());
        let _ = writeln!(s, "gamma      {:.6}", self.quasi_uniformity());
        for l in &self.labels {
            let _ = writeln!(s, "label {} ({} facets)", l.name, l.facets.len());
        }
        s
    }
}

/// Affine map `x = v0 + J xi` from the reference triangle onto an element.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: Point,
    /// Columns are `v1 - v0` and `v2 - v0`.
    pub jac: [[f64; 2]; 2],
    pub inv: [[f64; 2]; 2],
    pub det: f64,
}

impl AffineMap {
    pub fn new(v: [Point; 3]) -> Self {
        let jac = [[v[1][0] - v[0][0], v[2][0] - v[0][0]], [v[1][1] - v[0][1], v[2][1] - v[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [[jac[1][1] / det, -jac[0][1] / det], [-jac[1][0] / det, jac[0][0] / det]];
        AffineMap { origin: v[0], jac, inv, det }
    }

    pub fn map(&self, xi: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn inverse(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [
            self.inv[0][0] * d[0] + self.inv[0][1] * d[1],
            self.inv[1][0] * d[0] + self.inv[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient: `J^{-T} g`.
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv[0][0] * g[0] + self.inv[1][0] * g[1],
            self.inv[0][1] * g[0] + self.inv[1][1] * g[1],
        ]
    }
}

/// Uniform triangulation of `rect` with `nx` by `ny` cells, each cut along one
/// diagonal. Diagonal directions alternate in a checkerboard pattern.
///
/// With `split_y`, cells above the line are solid and cells below are fluid;
/// without it every element is fluid.
pub fn generate_structured(rect: Rect, nx: usize, ny: usize, split_y: Option<f64>) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Mesh("nx and ny must be at least 1".into()));
    }
    if !(rect.x1 > rect.x0 && rect.y1 > rect.y0) {
        return Err(Error::Mesh(format!("degenerate rectangle {rect:?}")));
    }
    let dy = (rect.y1 - rect.y0) / ny as f64;
    let split_row = match split_y {
        None => None,
        Some(ys) => {
            let j = ((ys - rect.y0) / dy).round();
            let on_line = (rect.y0 + j * dy - ys).abs() <= 1e-10 * (rect.y1 - rect.y0);
            if !on_line || j < 0.0 || j > ny as f64 {
                return Err(Error::Mesh(format!(
                    "split_y = {ys} does not lie on a mesh line (spacing {dy})"
                )));
            }
            Some((j as usize, ys))
        }
    };

    let xs: Vec<f64> = (0..=nx)
        .map(|i| {
            if i == nx {
                rect.x1
            } else {
                rect.x0 + (rect.x1 - rect.x0) * i as f64 / nx as f64
            }
        })
        .collect();
    let ys: Vec<f64> = (0..=ny)
        .map(|j| match split_row {
            Some((row, y)) if row == j => y,
            _ if j == ny => rect.y1,
            _ => rect.y0 + dy * j as f64,
        })
        .collect();

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            vertices.push([x, y]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    let mut subdomains = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        let tag = match split_row {
            Some((row, _)) if j >= row => Subdomain::Solid,
            _ => Subdomain::Fluid,
        };
        for i in 0..nx {
            let (v00, v10, v01, v11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
            subdomains.push(tag);
            subdomains.push(tag);
        }
    }
    Mesh::new(vertices, triangles, subdomains)
}

fn signed_area(vertices: &[Point], tri: &[usize; 3]) -> f64 {
    0.5 * orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]])
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn parse_fields<T: std::str::FromStr>(line: &str) -> std::result::Result<Vec<T>, String> {
    line.split_whitespace()
        .map(|s| s.parse::<T>().map_err(|_| format!("cannot parse `{s}`")))
        .collect()
}

fn fmt_points(points: &[Point]) -> String {
    points
        .iter()
        .map(|p| format!("({}, {})", p[0], p[1]))
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(n: usize) -> Mesh {
        generate_structured(Rect::new(0.0, 1.0, 0.0, 1.0), n, n, None).unwrap()
    }

    #[test]
    fn smallest_mesh() {
        let m = unit_square(1);
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.num_facets(), 5);
        assert_eq!(m.count_facets(FacetKind::Interior), 1);
    }

    #[test]
    fn split_mesh_counts() {
        let m = generate_structured(Rect::new(0.0, 1.0, -1.0, 0.5), 8, 12, Some(0.0)).unwrap();
        assert_eq!(m.num_elements(), 192);
        assert_eq!(m.label(INTERFACE_LABEL).unwrap().facets.len(), 8);
        assert_eq!(m.count_facets(FacetKind::Interface), 8);
        for e in 0..m.num_elements() {
            let y = m.centroid(e)[1];
            let expected = if y > 0.0 { Subdomain::Solid } else { Subdomain::Fluid };
            assert_eq!(m.subdomain(e), expected);
        }
    }

    #[test]
    fn split_off_grid_is_rejected() {
        let err = generate_structured(Rect::new(0.0, 1.0, 0.0, 1.0), 4, 4, Some(0.3)).unwrap_err();
        assert!(err.to_string().contains("mesh line"), "{err}");
    }

    #[test]
    fn normals_are_opposite_on_interior_facets() {
        let m = generate_structured(Rect::new(0.0, 2.0, 0.0, 1.0), 5, 3, Some(0.0 + 2.0 / 3.0)).unwrap();
        for facet in m.facets() {
            if let [Some((a, i)), Some((b, j))] = facet.sides {
                let na = m.outward_normal(a, i);
                let nb = m.outward_normal(b, j);
                assert_eq!(na[0], -nb[0]);
                assert_eq!(na[1], -nb[1]);
                assert!(a < b);
            }
        }
    }

    #[test]
    fn area_euler_and_quasi_uniformity() {
        for (nx, ny) in [(1, 1), (3, 7), (8, 12), (16, 5)] {
            let rect = Rect::new(-0.5, 1.5, 0.0, 0.75);
            let m = generate_structured(rect, nx, ny, None).unwrap();
            assert!((m.total_area() - rect.area()).abs() <= 1e-12 * rect.area());
            let (v, e, t) = (m.vertices().len() as i64, m.num_facets() as i64, m.num_elements() as i64);
            assert_eq!(v - e + t, 1);
            let (dx, dy) = ((rect.x1 - rect.x0) / nx as f64, (rect.y1 - rect.y0) / ny as f64);
            let bound = dx.hypot(dy) / dx.min(dy);
            assert!(m.quasi_uniformity() <= bound * (1.0 + 1e-12));
            assert!(m.quasi_uniformity() >= std::f64::consts::SQRT_2 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn unit_square_labels() {
        let m = unit_square(3)
            .classify_facets(&[
                ("left", &|p: Point| p[0] == 0.0),
                ("right", &|p: Point| p[0] == 1.0),
                ("bottom", &|p: Point| p[1] == 0.0),
                ("top", &|p: Point| p[1] == 1.0),
            ])
            .unwrap();
        assert_eq!(m.labels().len(), 4);
        let mut seen = vec![0; m.num_facets()];
        for l in m.labels() {
            assert_eq!(l.facets.len(), 3);
            for &f in &l.facets {
                seen[f] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c <= 1));
    }

    #[test]
    fn unlabelled_facet_is_reported() {
        let err = unit_square(1)
            .classify_facets(&[
                ("left", &|p: Point| p[0] == 0.0),
                ("right", &|p: Point| p[0] == 1.0),
                ("bottom", &|p: Point| p[1] == 0.0),
            ])
            .unwrap_err();
        assert!(err.to_string().contains("(0.5, 1)"), "{err}");
    }

    #[test]
    fn round_trip_is_exact() {
        let m = generate_structured(Rect::new(0.0, 1.0 / 3.0, -0.1, 0.7), 3, 4, Some(0.3))
            .unwrap()
            .classify_facets(&[("outer", &|_| true)])
            .unwrap();
        let text = m.to_ascii();
        let back = Mesh::from_ascii(&text, Path::new("mem")).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.subdomains(), m.subdomains());
        assert_eq!(back.labels(), m.labels());
    }

    #[test]
    fn out_of_range_vertex_reports_line() {
        let mut text = String::from("hdgfsi-mesh v1\n10 1\n");
        for i in 0..10 {
            text.push_str(&format!("{i} 0\n"));
        }
        text.push_str("0 1 999 f\n");
        let err = Mesh::from_ascii(&text, Path::new("bad.mesh")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("vertex index out of range"), "{msg}");
        assert!(msg.contains("line 13"), "{msg}");
    }

    #[test]
    fn hand_written_two_triangles() {
        let text = "hdgfsi-mesh v1\n4 2\n0 0\n1 0\n1 1\n0 1\n0 1 2 f\n0 2 3 s\n";
        let m = Mesh::from_ascii(text, Path::new("two.mesh")).unwrap();
        assert_eq!(m.count_facets(FacetKind::Interior), 0);
        assert_eq!(m.count_facets(FacetKind::Interface), 1);
        let f = m.label(INTERFACE_LABEL).unwrap().facets[0];
        assert_eq!(m.facet(f).vertices, [0, 2]);
        assert_eq!(m.facet(f).sides, [Some((0, 1)), Some((1, 2))]);
    }

    #[test]
    fn bad_header_and_negative_area() {
        let e = Mesh::from_ascii("hdgfsi-mesh v2\n", Path::new("x")).unwrap_err();
        assert!(e.to_string().contains("line 1"));
        let text = "hdgfsi-mesh v1\n3 1\n0 0\n0 1\n1 0\n0 1 2 f\n";
        let e = Mesh::from_ascii(text, Path::new("x")).unwrap_err();
        assert!(e.to_string().contains("non-positive area"), "{e}");
        assert!(e.to_string().contains("line 6"), "{e}");
    }

    #[test]
    fn locate_finds_containing_element() {
        let m = unit_square(4);
        for p in [[0.1, 0.1], [0.99, 0.5], [0.5, 0.5], [0.0, 1.0]] {
            let e = m.locate(p).unwrap();
            let [a, b, c] = m.element_vertices(e);
            let xs = [a[0], b[0], c[0]];
            assert!(xs.iter().cloned().fold(f64::MAX, f64::min) <= p[0] + 1e-14);
        }
        assert!(m.locate([1.5, 0.0]).is_none());
    }
}
