//! Conforming triangulations of the square (-1, 1)^2 and their red refinements.
//!
//! Local numbering: side `i` of a triangle is the side opposite its local
//! vertex `i`. Every side carries a global unit normal pointing out of its
//! lower-indexed adjacent triangle (the "minus" triangle) and into the other
//! one; on the boundary this is the outward normal of the domain.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::geom::{signed_area, Point, Vec2};

/// The one or two triangles adjacent to a side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SideNeighbors {
    pub minus: usize,
    pub plus: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    sides: Vec<[usize; 2]>,
    side_of_triangle: Vec<[usize; 3]>,
    neighbors: Vec<SideNeighbors>,
    // geometry caches
    area: Vec<f64>,
    barycenter: Vec<Point>,
    diameter: Vec<f64>,
    side_midpoint: Vec<Point>,
    side_length: Vec<f64>,
    side_normal: Vec<Vec2>,
    h_max: f64,
}

impl Mesh {
    /// Two triangles splitting (-1,1)^2 along the (-1,-1)--(1,1) diagonal.
    pub fn initial_square() -> Mesh {
        let vertices = vec![
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
        ];
        let triangles = vec![[0, 1, 2], [0, 2, 3]];
        Mesh::from_parts(vertices, triangles).expect("initial square mesh is valid")
    }

    /// The initial square refined `level` times.
    pub fn square(level: usize) -> Mesh {
        let mut m = Mesh::initial_square();
        for _ in 0..level {
            m = m.red_refine();
        }
        m
    }

    /// Builds side connectivity and geometry. Triangles must be
    /// counter-clockwise and every side may be shared by at most two of them.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        let nv = vertices.len();
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3 / 2 + 4);
        let mut sides = Vec::new();
        let mut side_of_triangle = Vec::with_capacity(triangles.len());
        let mut neighbors: Vec<SideNeighbors> = Vec::new();

        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(Error::IndexOutOfRange { kind: "vertex", index: v, len: nv });
                }
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if a <= 0.0 {
                return Err(Error::DegenerateElement);
            }
            let mut local = [0; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let p = tri[(i + 1) % 3];
                let q = tri[(i + 2) % 3];
                let key = (p.min(q), p.max(q));
                let s = *index.entry(key).or_insert_with(|| {
                    sides.push([key.0, key.1]);
                    neighbors.push(SideNeighbors { minus: t, plus: None });
                    sides.len() - 1
                });
                if neighbors[s].minus != t {
                    if neighbors[s].plus.is_some() {
                        return Err(Error::InvalidParameter(format!(
                            "side ({}, {}) shared by more than two triangles",
                            key.0, key.1
                        )));
                    }
                    neighbors[s].plus = Some(t);
                }
                *slot = s;
            }
            side_of_triangle.push(local);
        }

        let area: Vec<f64> = triangles
            .iter()
            .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
            .collect();
        let barycenter: Vec<Point> = triangles
            .iter()
            .map(|t| (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0)
            .collect();
        let diameter: Vec<f64> = triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| vertices[v]);
                a.dist(b).max(b.dist(c)).max(c.dist(a))
            })
            .collect();
        let side_midpoint = sides.iter().map(|s| (vertices[s[0]] + vertices[s[1]]) * 0.5).collect();
        let side_length = sides.iter().map(|s| vertices[s[0]].dist(vertices[s[1]])).collect();
        let side_normal = (0..sides.len())
            .map(|s| {
                let t = neighbors[s].minus;
                let i = side_of_triangle[t].iter().position(|&x| x == s).unwrap();
                let tri = triangles[t];
                let p = vertices[tri[(i + 1) % 3]];
                let q = vertices[tri[(i + 2) % 3]];
                (q - p).perp_cw().normalized()
            })
            .collect();
        let h_max = diameter.iter().copied().fold(0.0, f64::max);

        Ok(Mesh {
            vertices,
            triangles,
            sides,
            side_of_triangle,
            neighbors,
            area,
            barycenter,
            diameter,
            side_midpoint,
            side_length,
            side_normal,
            h_max,
        })
    }

    /// Splits every triangle into four congruent children through its edge
    /// midpoints. Midpoint vertex of parent side `s` gets index `V + s`.
    pub fn red_refine(&self) -> Mesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.side_midpoint.iter().copied());
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let [sa, sb, sc] = self.side_of_triangle[t];
            // midpoint opposite a lies on bc, etc.
            let (mbc, mca, mab) = (nv + sa, nv + sb, nv + sc);
            triangles.push([a, mab, mca]);
            triangles.push([mab, b, mbc]);
            triangles.push([mca, mbc, c]);
            triangles.push([mbc, mca, mab]);
        }
        Mesh::from_parts(vertices, triangles).expect("red refinement preserves validity")
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_sides(&self) -> usize {
        self.sides.len()
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn sides(&self) -> &[[usize; 2]] {
        &self.sides
    }

    pub fn side_of_triangle(&self) -> &[[usize; 3]] {
        &self.side_of_triangle
    }

    pub fn neighbors(&self) -> &[SideNeighbors] {
        &self.neighbors
    }

    pub fn areas(&self) -> &[f64] {
        &self.area
    }

    pub fn barycenters(&self) -> &[Point] {
        &self.barycenter
    }

    pub fn diameters(&self) -> &[f64] {
        &self.diameter
    }

    pub fn side_midpoints(&self) -> &[Point] {
        &self.side_midpoint
    }

    pub fn side_lengths(&self) -> &[f64] {
        &self.side_length
    }

    pub fn side_normals(&self) -> &[Vec2] {
        &self.side_normal
    }

    pub fn is_boundary(&self, s: usize) -> bool {
        self.neighbors[s].plus.is_none()
    }

    /// Vertex coordinates of triangle `t`.
    #[inline]
    pub fn corners(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    /// End points of side `s`.
    #[inline]
    pub fn side_endpoints(&self, s: usize) -> [Point; 2] {
        self.sides[s].map(|v| self.vertices[v])
    }

    /// +1 if the global normal of local side `i` of `t` is outward for `t`, else -1.
    #[inline]
    pub fn orientation(&self, t: usize, i: usize) -> f64 {
        if self.neighbors[self.side_of_triangle[t][i]].minus == t {
            1.0
        } else {
            -1.0
        }
    }

    /// Outward unit normals of the three local sides of `t`.
    #[inline]
    pub fn outward_normals(&self, t: usize) -> [Vec2; 3] {
        let s = self.side_of_triangle[t];
        [0, 1, 2].map(|i| self.side_normal[s[i]] * self.orientation(t, i))
    }

    fn check_triangle(&self, t: usize) -> Result<()> {
        if t < self.triangles.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { kind: "triangle", index: t, len: self.triangles.len() })
        }
    }

    fn check_side(&self, s: usize) -> Result<()> {
        if s < self.sides.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { kind: "side", index: s, len: self.sides.len() })
        }
    }

    pub fn barycenter(&self, t: usize) -> Result<Point> {
        self.check_triangle(t)?;
        Ok(self.barycenter[t])
    }

    pub fn element_diameter(&self, t: usize) -> Result<f64> {
        self.check_triangle(t)?;
        Ok(self.diameter[t])
    }

    pub fn side_midpoint(&self, s: usize) -> Result<Point> {
        self.check_side(s)?;
        Ok(self.side_midpoint[s])
    }

    pub fn side_normal(&self, s: usize) -> Result<Vec2> {
        self.check_side(s)?;
        Ok(self.side_normal[s])
    }

    /// Debug dump: `v x y` per vertex, `t i j k` per triangle.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {}", v.x, v.y)?;
        }
        for t in &self.triangles {
            writeln!(w, "t {} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}
