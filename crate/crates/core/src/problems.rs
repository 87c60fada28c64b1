//! Model SPD problems on structured grids: Laplacians, anisotropic diffusion and a
//! vector-valued elasticity operator, each with nodal coordinates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ordering::Coordinates;
use crate::sparse::SparseSpdMatrix;

/// Lexicographic grid points with `x` varying fastest.
pub fn grid_coordinates(nx: usize, ny: usize, nz: usize) -> Coordinates {
    let mut pts = Vec::with_capacity(nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                pts.push([i as f64, j as f64, k as f64]);
            }
        }
    }
    Coordinates::new(pts)
}

/// Five-point Laplacian on an `n x n` grid with Dirichlet boundary.
pub fn laplacian_2d(n: usize) -> SparseSpdMatrix {
    let id = |i: usize, j: usize| i + n * j;
    let mut t = Vec::with_capacity(3 * n * n);
    for j in 0..n {
        for i in 0..n {
            t.push((id(i, j), id(i, j), 4.0));
            if i + 1 < n {
                t.push((id(i + 1, j), id(i, j), -1.0));
            }
            if j + 1 < n {
                t.push((id(i, j + 1), id(i, j), -1.0));
            }
        }
    }
    SparseSpdMatrix::from_triplets(n * n, &t).expect("valid stencil")
}

/// Seven-point Laplacian on an `n x n x n` grid with Dirichlet boundary.
pub fn laplacian_3d(n: usize) -> SparseSpdMatrix {
    let id = |i: usize, j: usize, k: usize| i + n * (j + n * k);
    let mut t = Vec::with_capacity(4 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let p = id(i, j, k);
                t.push((p, p, 6.0));
                if i + 1 < n {
                    t.push((id(i + 1, j, k), p, -1.0));
                }
                if j + 1 < n {
                    t.push((id(i, j + 1, k), p, -1.0));
                }
                if k + 1 < n {
                    t.push((id(i, j, k + 1), p, -1.0));
                }
            }
        }
    }
    SparseSpdMatrix::from_triplets(n * n * n, &t).expect("valid stencil")
}

/// Finite differences for `-div(c K grad u)` on an `n^3` grid with Dirichlet boundary.
///
/// `K` is a constant symmetric 3x3 tensor and `c` equals `contrast` on the upper half of
/// the grid (`z >= n/2`) and 1 elsewhere. Axis terms use the seven-point stencil with
/// harmonic face averages of `c`; mixed terms use the centred four-point cross stencil
/// with arithmetic averages. With `K = I` and unit contrast this is exactly
/// [`laplacian_3d`]. For constant contrast the operator is positive definite whenever
/// `K` is; for layered contrast this holds as long as the mixed terms stay moderate.
pub fn aniso_poisson(n: usize, k: &[[f64; 3]; 3], contrast: f64) -> SparseSpdMatrix {
    let id = |p: [usize; 3]| p[0] + n * (p[1] + n * p[2]);
    let coef = |p: [usize; 3]| if 2 * p[2] >= n { contrast } else { 1.0 };
    let mut t = Vec::new();
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let p = [x, y, z];
                let cp = coef(p);
                let mut diag = 0.0;
                for d in 0..3 {
                    let kdd = k[d][d];
                    // lower neighbour: boundary or an edge already counted from that side
                    if p[d] == 0 {
                        diag += kdd * cp;
                    }
                    if p[d] + 1 == n {
                        diag += kdd * cp;
                    } else {
                        let mut q = p;
                        q[d] += 1;
                        let cq = coef(q);
                        let w = kdd * 2.0 * cp * cq / (cp + cq);
                        t.push((id(q), id(p), -w));
                        t.push((id(q), id(q), w));
                        diag += w;
                    }
                }
                t.push((id(p), id(p), diag));
                for d in 0..3 {
                    for e in d + 1..3 {
                        let kde = k[d][e];
                        if kde == 0.0 {
                            continue;
                        }
                        // only neighbours later in the numbering, so each pair is added once
                        for se in [-1i64, 1] {
                            let mut q = [p[0] as i64, p[1] as i64, p[2] as i64];
                            q[d] += 1;
                            q[e] += se;
                            if q.iter().any(|&v| v < 0 || v >= n as i64) {
                                continue;
                            }
                            let q = [q[0] as usize, q[1] as usize, q[2] as usize];
                            let w = -kde * se as f64 * 0.5 * 0.5 * (cp + coef(q));
                            t.push((id(q), id(p), w));
                        }
                    }
                }
            }
        }
    }
    SparseSpdMatrix::from_triplets(n * n * n, &t).expect("valid stencil")
}

/// Trilinear hexahedral elasticity on an `n^3` element grid of the unit cube with the
/// `z = 0` face clamped. Three unknowns per free node, numbered node by node.
pub fn elasticity(n: usize, young: f64, poisson: f64) -> (SparseSpdMatrix, Coordinates) {
    let nn = n + 1;
    let h = 1.0 / n as f64;
    let ke = hex_stiffness(h, young, poisson);
    // free nodes are those with z > 0
    let free = |i: usize, j: usize, k: usize| -> Option<usize> {
        if k == 0 {
            None
        } else {
            Some(i + nn * (j + nn * (k - 1)))
        }
    };
    let nfree = nn * nn * n;
    let mut t = Vec::new();
    for ez in 0..n {
        for ey in 0..n {
            for ex in 0..n {
                let mut dofs = [None; 24];
                for (a, corner) in HEX_CORNERS.iter().enumerate() {
                    let node = free(ex + corner[0], ey + corner[1], ez + corner[2]);
                    for c in 0..3 {
                        dofs[3 * a + c] = node.map(|v| 3 * v + c);
                    }
                }
                for r in 0..24 {
                    for c in 0..=r {
                        if let (Some(dr), Some(dc)) = (dofs[r], dofs[c]) {
                            let v = ke[r][c];
                            if v != 0.0 {
                                t.push((dr, dc, v));
                            }
                        }
                    }
                }
            }
        }
    }
    let a = SparseSpdMatrix::from_triplets(3 * nfree, &t).expect("valid assembly");
    let mut pts = Vec::with_capacity(3 * nfree);
    for k in 1..nn {
        for j in 0..nn {
            for i in 0..nn {
                let p = [i as f64 * h, j as f64 * h, k as f64 * h];
                pts.extend([p, p, p]);
            }
        }
    }
    (a, Coordinates::new(pts))
}

const HEX_CORNERS: [[usize; 3]; 8] = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1]];

fn hex_stiffness(h: f64, young: f64, nu: f64) -> [[f64; 24]; 24] {
    let lambda = young * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = young / (2.0 * (1.0 + nu));
    let g = 0.5 / 3f64.sqrt();
    let pts = [0.5 - g, 0.5 + g];
    let w = h * h * h / 8.0;
    let mut k = [[0.0; 24]; 24];
    for &qx in &pts {
        for &qy in &pts {
            for &qz in &pts {
                let q = [qx, qy, qz];
                // physical gradients of the eight shape functions
                let mut grad = [[0.0; 3]; 8];
                for (a, c) in HEX_CORNERS.iter().enumerate() {
                    let f = |d: usize| if c[d] == 1 { q[d] } else { 1.0 - q[d] };
                    let df = |d: usize| if c[d] == 1 { 1.0 } else { -1.0 };
                    grad[a] = [df(0) * f(1) * f(2) / h, f(0) * df(1) * f(2) / h, f(0) * f(1) * df(2) / h];
                }
                // strain-displacement rows in Voigt order xx, yy, zz, yz, xz, xy
                let mut b = [[0.0; 24]; 6];
                for a in 0..8 {
                    let [gx, gy, gz] = grad[a];
                    b[0][3 * a] = gx;
                    b[1][3 * a + 1] = gy;
                    b[2][3 * a + 2] = gz;
                    b[3][3 * a + 1] = gz;
                    b[3][3 * a + 2] = gy;
                    b[4][3 * a] = gz;
                    b[4][3 * a + 2] = gx;
                    b[5][3 * a] = gy;
                    b[5][3 * a + 1] = gx;
                }
                let mut d = [[0.0; 6]; 6];
                for i in 0..3 {
                    for j in 0..3 {
                        d[i][j] = lambda;
                    }
                    d[i][i] += 2.0 * mu;
                    d[i + 3][i + 3] = mu;
                }
                let mut db = [[0.0; 24]; 6];
                for i in 0..6 {
                    for c in 0..24 {
                        db[i][c] = (0..6).map(|j| d[i][j] * b[j][c]).sum();
                    }
                }
                for r in 0..24 {
                    for c in 0..24 {
                        k[r][c] += w * (0..6).map(|i| b[i][r] * db[i][c]).sum::<f64>();
                    }
                }
            }
        }
    }
    k
}

/// Named model problem families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Laplacian2d,
    Laplacian3d,
    AnisoPoisson,
    ElasticityLike,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [Self::Laplacian2d, Self::Laplacian3d, Self::AnisoPoisson, Self::ElasticityLike];

    pub fn name(self) -> &'static str {
        match self {
            Self::Laplacian2d => "laplacian2d",
            Self::Laplacian3d => "laplacian3d",
            Self::AnisoPoisson => "aniso-poisson",
            Self::ElasticityLike => "elasticity-like",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown problem '{s}' (expected one of laplacian2d, laplacian3d, aniso-poisson, elasticity-like)"))
    }
}

/// Parameters for [`generate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    /// Grid points per side (elements per side for elasticity).
    pub size: usize,
    /// Diffusion tensor for the anisotropic problem.
    pub tensor: [[f64; 3]; 3],
    pub contrast: f64,
    pub young: f64,
    pub poisson: f64,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            size: 16,
            tensor: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            contrast: 1.0,
            young: 1.0,
            poisson: 0.3,
        }
    }
}

/// Matrix and coordinates of a model problem.
pub fn generate(kind: ProblemKind, params: &ProblemParams) -> (SparseSpdMatrix, Coordinates) {
    let n = params.size;
    match kind {
        ProblemKind::Laplacian2d => (laplacian_2d(n), grid_coordinates(n, n, 1)),
        ProblemKind::Laplacian3d => (laplacian_3d(n), grid_coordinates(n, n, n)),
        ProblemKind::AnisoPoisson => (aniso_poisson(n, &params.tensor, params.contrast), grid_coordinates(n, n, n)),
        ProblemKind::ElasticityLike => elasticity(n, params.young, params.poisson),
    }
}
