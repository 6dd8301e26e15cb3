#![allow(dead_code)]

use nalgebra::DMatrix;
use ris_broadcast::conic::{
    solve_least_norm, solve_sdp, ConstraintSense, LeastNormQp, QpStatus, QpTolerances, SdpMatrix, SdpProblem,
    SdpStatus, SdpTolerances, Sense,
};
use ris_broadcast::numerics::{ComplexMatrix, ComplexVector, HermitianMatrix, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn herm(rows: &[&[C64]]) -> HermitianMatrix {
    let n = rows.len();
    HermitianMatrix::new(ComplexMatrix::from_fn(n, n, |r, col| rows[r][col])).unwrap()
}

pub fn real_diag(d: &[f64]) -> SdpMatrix {
    SdpMatrix::Dense(HermitianMatrix::from_real_diagonal(d))
}

pub enum Instance {
    Sdp(SdpProblem),
    Qp(LeastNormQp),
}

pub struct CorpusEntry {
    pub name: &'static str,
    pub instance: Instance,
    pub optimum: f64,
}

pub struct CorpusResult {
    pub objective: f64,
    pub gap: f64,
    pub optimal: bool,
}

fn min_trace(dim: usize) -> SdpProblem {
    SdpProblem::new(dim, Sense::Minimize, SdpMatrix::Dense(HermitianMatrix::identity(dim)))
}

fn unit_diag(dim: usize, sense: Sense, obj: HermitianMatrix) -> SdpProblem {
    let mut p = SdpProblem::new(dim, sense, SdpMatrix::Dense(obj));
    p.unit_diagonal = true;
    p
}

/// Small conic problems whose optima are known in closed form.
pub fn corpus() -> Vec<CorpusEntry> {
    let mut out = Vec::new();

    let mut p = min_trace(2);
    p.add_constraint(real_diag(&[1.0, 1.0]), vec![], ConstraintSense::Ge, 1.0);
    out.push(CorpusEntry { name: "trace-identity", instance: Instance::Sdp(p), optimum: 1.0 });

    let mut p = min_trace(2);
    p.add_constraint(real_diag(&[2.0, 1.0]), vec![], ConstraintSense::Ge, 1.0);
    out.push(CorpusEntry { name: "trace-diag21", instance: Instance::Sdp(p), optimum: 0.5 });

    // max g s.t. tr(V) >= g, diag(V) = 1.
    let mut p = SdpProblem::new(2, Sense::Maximize, SdpMatrix::Zero);
    p.unit_diagonal = true;
    let g = p.add_scalar(1.0);
    p.add_constraint(real_diag(&[1.0, 1.0]), vec![(g, -1.0)], ConstraintSense::Ge, 0.0);
    out.push(CorpusEntry { name: "maxmin-identity-unitdiag", instance: Instance::Sdp(p), optimum: 2.0 });

    // Rank-one constraint: optimum 1/‖u‖².
    let u = ComplexVector::from_vec(vec![c(1.0, 0.5), c(-0.3, 1.2), c(0.0, -0.7)]);
    let nu = u.norm_squared();
    let mut p = min_trace(3);
    p.add_constraint(SdpMatrix::rank_one(u), vec![], ConstraintSense::Ge, 1.0);
    out.push(CorpusEntry { name: "rank-one-beam", instance: Instance::Sdp(p), optimum: 1.0 / nu });

    // Two orthogonal users with gains a², b².
    let (a, b) = (2.0, 0.5);
    let h1 = ComplexVector::from_vec(vec![c(a, 0.0), c(0.0, 0.0)]);
    let h2 = ComplexVector::from_vec(vec![c(0.0, 0.0), c(0.0, b)]);
    let mut p = min_trace(2);
    p.add_constraint(SdpMatrix::rank_one(h1), vec![], ConstraintSense::Ge, 1.0);
    p.add_constraint(SdpMatrix::rank_one(h2), vec![], ConstraintSense::Ge, 1.0);
    out.push(CorpusEntry {
        name: "orthogonal-users",
        instance: Instance::Sdp(p),
        optimum: 1.0 / (a * a) + 1.0 / (b * b),
    });

    // Unit diagonal, 2x2: min over |z| <= 1 of C11 + C22 + 2 Re(C12 conj z) = C11 + C22 − 2|C12|.
    let p = unit_diag(2, Sense::Minimize, herm(&[&[c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0), c(0.0, 0.0)]]));
    out.push(CorpusEntry { name: "unitdiag-offdiag-real", instance: Instance::Sdp(p), optimum: -2.0 });

    let p = unit_diag(2, Sense::Minimize, herm(&[&[c(1.0, 0.0), c(1.0, 1.0)], &[c(1.0, -1.0), c(2.0, 0.0)]]));
    out.push(CorpusEntry {
        name: "unitdiag-offdiag-complex",
        instance: Instance::Sdp(p),
        optimum: 3.0 - 2.0 * 2f64.sqrt(),
    });

    // max u^H V u over unit diagonal: (Σ|u_i|)².
    let u = ComplexVector::from_vec(vec![c(0.6, 0.8), c(-1.0, 0.0), c(0.0, 2.0)]);
    let l1: f64 = u.iter().map(|z| z.norm()).sum();
    let p = unit_diag(3, Sense::Maximize, HermitianMatrix::outer(&u));
    out.push(CorpusEntry { name: "unitdiag-phase-alignment", instance: Instance::Sdp(p), optimum: l1 * l1 });

    // min 2 tr X + s s.t. tr X + s >= 3: the scalar is the cheaper resource.
    let mut p = SdpProblem::new(2, Sense::Minimize, real_diag(&[2.0, 2.0]));
    let s = p.add_scalar(1.0);
    p.add_constraint(real_diag(&[1.0, 1.0]), vec![(s, 1.0)], ConstraintSense::Ge, 3.0);
    out.push(CorpusEntry { name: "scalar-cheaper", instance: Instance::Sdp(p), optimum: 3.0 });

    out.push(CorpusEntry {
        name: "qp-halfspace",
        instance: Instance::Qp(LeastNormQp { n: 2, rows: vec![(vec![1.0, 0.0], 1.0)] }),
        optimum: 1.0,
    });
    out.push(CorpusEntry {
        name: "qp-box-corner",
        instance: Instance::Qp(LeastNormQp {
            n: 2,
            rows: vec![(vec![1.0, 0.0], 1.0), (vec![0.0, 1.0], 1.0)],
        }),
        optimum: 2.0,
    });
    let a = vec![0.3, -1.2, 2.0, 0.7];
    let na: f64 = a.iter().map(|v| v * v).sum();
    out.push(CorpusEntry {
        name: "qp-oblique-halfspace",
        instance: Instance::Qp(LeastNormQp { n: 4, rows: vec![(a, 1.7)] }),
        optimum: 1.7 * 1.7 / na,
    });
    out
}

/// Solves one corpus entry. For QPs the objective is `‖x‖²` and the gap is
/// taken against the Lagrangian dual built from the returned multipliers.
pub fn solve_entry(e: &CorpusEntry) -> CorpusResult {
    match &e.instance {
        Instance::Sdp(p) => {
            let s = solve_sdp(p, &SdpTolerances::default()).unwrap();
            CorpusResult {
                objective: s.objective_value,
                gap: s.duality_gap,
                optimal: s.status == SdpStatus::Optimal,
            }
        }
        Instance::Qp(q) => {
            let s = solve_least_norm(q, &QpTolerances::default()).unwrap();
            let primal: f64 = s.x.iter().map(|v| v * v).sum();
            let a = DMatrix::from_fn(q.rows.len(), q.n, |r, col| q.rows[r].0[col]);
            let mut atz = vec![0.0; q.n];
            let mut bz = 0.0;
            for (j, z) in s.multipliers.iter().enumerate() {
                bz += z * q.rows[j].1;
                for col in 0..q.n {
                    atz[col] += z * a[(j, col)];
                }
            }
            // ½‖x‖² has dual b·z − ½‖A^T z‖².
            let dual = bz - 0.5 * atz.iter().map(|v| v * v).sum::<f64>();
            CorpusResult {
                objective: primal,
                gap: (0.5 * primal - dual).abs(),
                optimal: s.status == QpStatus::Optimal,
            }
        }
    }
}
