//! The gradient quadratic form and the constants built from it.

use serde::Serialize;

use super::eigen::{spectral_gap, GapReport};
use super::generator::{build_generator, GeneratorOperator};
use crate::error::{Result, SosError};
use crate::model::config::Move;
use crate::model::enumerate::{EnumeratedMeasure, StateSpace};
use crate::model::params::{HeightBound, MeasureKind, ModelParams};

/// A named number with the truncation that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct FormReport {
    pub name: String,
    pub value: f64,
    #[serde(rename = "L")]
    pub len: usize,
    #[serde(rename = "M")]
    pub m: Option<u32>,
    pub beta: f64,
    #[serde(rename = "R")]
    pub r: u32,
    pub space_size: usize,
}

impl FormReport {
    pub fn new(name: &str, value: f64, params: &ModelParams, r: u32, space_size: usize) -> Self {
        let m = match params.bound {
            HeightBound::Finite(m) => Some(m),
            HeightBound::Infinite => None,
        };
        FormReport { name: name.to_string(), value, len: params.len, m, beta: params.beta, r, space_size }
    }
}

fn require_auxiliary(params: &ModelParams) -> Result<()> {
    if params.kind != MeasureKind::Auxiliary {
        return Err(SosError::Precondition("the gradient form lives on the auxiliary measure".into()));
    }
    Ok(())
}

/// Edges `eta -> eta + e_k` with `e_k = delta_k - delta_{k+1}` (`e_L = delta_L`)
/// that stay inside the truncated grid.
fn up_edges(space: &StateSpace, idx: usize) -> impl Iterator<Item = usize> + '_ {
    (1..=space.sites()).filter_map(move |k| space.neighbor(idx, Move::up(k)))
}

/// Reversible generator whose Dirichlet form is the gradient form: the edge
/// `{eta, eta + e_k}` has conductance `nu(eta)`, so the up rate is 1 and the
/// down rate is `nu(eta) / nu(eta + e_k)`.
pub fn gradient_generator(measure: &EnumeratedMeasure) -> Result<GeneratorOperator> {
    let space = &measure.space;
    let lw = &measure.log_weights;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); space.len()];
    for idx in 0..space.len() {
        for j in up_edges(space, idx) {
            rows[idx].push((j, 1.0));
            rows[j].push((idx, (lw[idx] - lw[j]).exp()));
        }
    }
    let mut g = GeneratorOperator::from_rows(rows, lw.clone())?;
    g.space = Some(space.clone());
    Ok(g)
}

/// `sum_k E[(f(eta + e_k) - f(eta))^2]` over edges inside the truncation.
pub fn gradient_form(params: &ModelParams, r: u32, f: &[f64]) -> Result<f64> {
    require_auxiliary(params)?;
    let measure = EnumeratedMeasure::for_params(params, r)?;
    if f.len() != measure.space.len() {
        return Err(SosError::LengthMismatch { expected: measure.space.len(), got: f.len() });
    }
    Ok(gradient_form_on(&measure, f))
}

pub fn gradient_form_on(measure: &EnumeratedMeasure, f: &[f64]) -> f64 {
    let space = &measure.space;
    (0..space.len())
        .map(|idx| {
            let p = measure.prob(idx);
            up_edges(space, idx).map(|j| p * (f[j] - f[idx]).powi(2)).sum::<f64>()
        })
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct GapEquivalence {
    pub ratio: FormReport,
    /// Gap of the single-site generator.
    pub generator_gap: GapReport,
    /// `inf Ebar(f, f) / Var(f)`.
    pub form_gap: GapReport,
    /// Extremes of the up rate over all edges.
    pub c1: f64,
    pub c2: f64,
    pub passed: bool,
}

/// Compares the gap of the single-site dynamics with the gradient-form gap.
/// The two Dirichlet forms have conductances `nu(eta) c(eta, eta + e_k)` and
/// `nu(eta)` on the same edges, so their ratio lies in `[c1, c2]`.
pub fn gap_equivalence(params: &ModelParams, r: u32) -> Result<GapEquivalence> {
    require_auxiliary(params)?;
    let gen = build_generator(params, r)?;
    let measure = EnumeratedMeasure::for_params(params, r)?;
    let space = &measure.space;
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    for idx in 0..space.len() {
        for j in up_edges(space, idx) {
            let c = gen.rate(idx, j);
            c1 = c1.min(c);
            c2 = c2.max(c);
        }
    }
    let generator_gap = spectral_gap(&gen)?;
    let form_gap = spectral_gap(&gradient_generator(&measure)?)?;
    let ratio = generator_gap.gap / form_gap.gap;
    let slack = 1e-9 * ratio.abs().max(1.0);
    Ok(GapEquivalence {
        ratio: FormReport::new("gap_ratio", ratio, params, r, space.len()),
        generator_gap,
        form_gap,
        c1,
        c2,
        passed: ratio >= c1 - slack && ratio <= c2 + slack,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PoincareReport {
    /// `sup_f Var(f) / Ebar(f, f)`.
    pub constant: FormReport,
    /// `constant / (L max(L, M^2))`.
    pub normalized: FormReport,
    /// Conditional constants given `eta_1`, for `eta_1 = -M..=M`.
    pub conditional: Vec<f64>,
    pub conditional_sup: FormReport,
}

pub fn poincare_constant(params: &ModelParams, r: u32) -> Result<PoincareReport> {
    require_auxiliary(params)?;
    let m = params.bound.finite().ok_or_else(|| SosError::Precondition("finite M required".into()))?;
    let measure = EnumeratedMeasure::for_params(params, r)?;
    let n = measure.space.len();
    let gap = spectral_gap(&gradient_generator(&measure)?)?.gap;
    let c = 1.0 / gap;
    let len = params.len as f64;
    let scale = len * len.max((m * m) as f64);
    let conditional = conditional_constants(&measure)?;
    let sup = conditional.iter().copied().fold(0.0, f64::max);
    Ok(PoincareReport {
        constant: FormReport::new("poincare_constant", c, params, r, n),
        normalized: FormReport::new("poincare_normalized", c / scale, params, r, n),
        conditional,
        conditional_sup: FormReport::new("conditional_poincare", sup, params, r, n),
    })
}

/// For each value of `eta_1`, `sup_f Var(f | eta_1) / sum_{k >= 2} E[(delta_k^+ f)^2 | eta_1]`.
fn conditional_constants(measure: &EnumeratedMeasure) -> Result<Vec<f64>> {
    let space = &measure.space;
    let n0 = space.radix()[0];
    let inner = space.len() / n0;
    let mut out = Vec::with_capacity(n0);
    for x in 0..n0 {
        if inner == 1 {
            out.push(0.0);
            continue;
        }
        let global = |t: usize| t * n0 + x;
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); inner];
        let lw: Vec<f64> = (0..inner).map(|t| measure.log_weights[global(t)]).collect();
        for t in 0..inner {
            let idx = global(t);
            for k in 1..space.sites() {
                let digit = (idx / space.strides()[k]) % space.radix()[k];
                if digit + 1 < space.radix()[k] {
                    let u = (idx + space.strides()[k]) / n0;
                    rows[t].push((u, 1.0));
                    rows[u].push((t, (lw[t] - lw[u]).exp()));
                }
            }
        }
        let g = GeneratorOperator::from_rows(rows, lw)?;
        out.push(1.0 / spectral_gap(&g)?.gap);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::{PotentialCatalog, PotentialShape};
    use crate::spectral::eigen::{dense_spectrum, rayleigh_quotient};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn aux(len: usize, m: u32, beta: f64) -> ModelParams {
        ModelParams::auxiliary(len, m, beta).unwrap()
    }

    /// Oracle: the form by explicit coordinate arithmetic on decoded states.
    fn brute_form(space: &StateSpace, pi: &[f64], f: &[f64]) -> f64 {
        let len = space.sites();
        let mut acc = 0.0;
        for idx in 0..space.len() {
            let eta = space.decode(idx);
            for k in 0..len {
                let mut up = eta.clone();
                up[k] += 1;
                if k + 1 < len {
                    up[k + 1] -= 1;
                }
                if let Some(j) = space.encode(&up) {
                    acc += pi[idx] * (f[j] - f[idx]).powi(2);
                }
            }
        }
        acc
    }

    #[test]
    fn form_matches_oracle_and_ignores_constants() {
        let p = aux(3, 1, 1.5);
        let measure = EnumeratedMeasure::for_params(&p, 2).unwrap();
        let pi = measure.probs();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f: Vec<f64> = (0..pi.len()).map(|_| rng.gen()).collect();
        let e = gradient_form(&p, 2, &f).unwrap();
        assert!((e - brute_form(&measure.space, &pi, &f)).abs() < 1e-13);
        let g: Vec<f64> = f.iter().map(|v| v + 5.0).collect();
        assert!((gradient_form(&p, 2, &g).unwrap() - e).abs() < 1e-12);
        assert_eq!(gradient_form(&p, 2, &vec![2.0; pi.len()]).unwrap(), 0.0);
        // the generator realizes the same form
        let gen = gradient_generator(&measure).unwrap();
        assert!((gen.dirichlet_form(&f) - e).abs() < 1e-12);
    }

    #[test]
    fn last_coordinate_probe() {
        let p = aux(3, 1, 2.0);
        let measure = EnumeratedMeasure::for_params(&p, 3).unwrap();
        let f: Vec<f64> = (0..measure.space.len()).map(|i| measure.space.coord(i, 2) as f64).collect();
        // each edge changes eta_L by -1 (k = L-1), +1 (k = L) or 0
        let pi = measure.probs();
        let mut expect = 0.0;
        for idx in 0..pi.len() {
            for k in [2usize, 3] {
                if measure.space.neighbor(idx, Move::up(k)).is_some() {
                    expect += pi[idx];
                }
            }
        }
        assert!((gradient_form_on(&measure, &f) - expect).abs() < 1e-13);
    }

    #[test]
    fn one_site_form_gap_by_dense_oracle() {
        // L = 1: eta_1 is uniform on [-M, M], so the form is the unit path
        let p = aux(1, 2, 1.3);
        let rep = poincare_constant(&p, 0).unwrap();
        let w = vec![0.2; 5];
        let mut rates = vec![vec![0.0; 5]; 5];
        for x in 0..4 {
            rates[x][x + 1] = 1.0;
            rates[x + 1][x] = 1.0;
        }
        let g = GeneratorOperator::from_dense(&rates, &w).unwrap();
        let gap = dense_spectrum(&g.symmetrized().unwrap())[1];
        assert!((rep.constant.value - 1.0 / gap).abs() < 1e-10);
        // path of 5 vertices: gap 2 - 2 cos(pi / 5)
        assert!((gap - (2.0 - 2.0 * (std::f64::consts::PI / 5.0).cos())).abs() < 1e-12);
    }

    #[test]
    fn equivalence_band_and_variational_probe() {
        for cat in [None, Some(PotentialCatalog::new(vec![PotentialShape::single(0.03)], 3.0).unwrap())] {
            let mut p = aux(2, 1, 2.0);
            if let Some(c) = cat {
                p = p.with_catalog(c);
            }
            let eq = gap_equivalence(&p, 3).unwrap();
            assert!(eq.passed, "{} not in [{}, {}]", eq.ratio.value, eq.c1, eq.c2);
            let gen = build_generator(&p, 3).unwrap();
            let space = gen.space.clone().unwrap();
            let f: Vec<f64> = (0..gen.n()).map(|i| space.coord(i, 0) as f64).collect();
            assert!(eq.generator_gap.gap <= rayleigh_quotient(&gen, &f) + 1e-12);
        }
    }

    #[test]
    fn equivalence_ratio_stable_in_truncation() {
        let p = aux(2, 1, 2.0);
        let a = gap_equivalence(&p, 3).unwrap().ratio.value;
        let b = gap_equivalence(&p, 5).unwrap().ratio.value;
        assert!((a / b - 1.0).abs() < 0.1);
    }

    #[test]
    fn conditional_constant_flat_in_eta1_without_potential() {
        let rep = poincare_constant(&aux(3, 2, 2.0), 3).unwrap();
        let c0 = rep.conditional[0];
        assert!(rep.conditional.iter().all(|c| (c - c0).abs() < 1e-9 * c0));
        assert_eq!(rep.constant.space_size, 5 * 49);
    }

    #[test]
    fn report_serializes_required_fields() {
        let r = FormReport::new("x", 1.5, &aux(2, 1, 2.0), 3, 35);
        let v = serde_json::to_value(&r).unwrap();
        for k in ["name", "value", "L", "M", "beta", "R", "space_size"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
