use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dataset::{FitDataset, Split};
use super::lm::{levenberg_marquardt, LeastSquaresProblem, LmOptions, Termination};
use crate::error::{Error, Result};
use crate::perception::MAX_BETA;
use crate::pose::EyePose;

pub const IPD_MIN: f64 = 0.045;
pub const IPD_MAX: f64 = 0.080;
/// Starting IPD for every participant (m).
pub const IPD_INIT: f64 = 0.063;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    WithOffset,
    ZeroOffset,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::WithOffset => "with-offset",
            Variant::ZeroOffset => "zero-offset",
        }
    }
}

/// Model variant plus the fixed viewing geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub pose: EyePose,
}

impl ModelSpec {
    pub fn new(variant: Variant, pose: EyePose) -> Self {
        Self { variant, pose }
    }

    /// Free parameters: `[β, ipd₁ … ipd_N]` or `[ipd₁ … ipd_N]`.
    pub fn num_params(&self, n_participants: usize) -> usize {
        match self.variant {
            Variant::WithOffset => 1 + n_participants,
            Variant::ZeroOffset => n_participants,
        }
    }

    pub fn initial_params(&self, n_participants: usize) -> Vec<f64> {
        let mut p = vec![IPD_INIT; self.num_params(n_participants)];
        if self.variant == Variant::WithOffset {
            p[0] = 0.0;
        }
        p
    }

    fn split_params<'p>(&self, params: &'p [f64]) -> (f64, &'p [f64]) {
        match self.variant {
            Variant::WithOffset => (params[0], &params[1..]),
            Variant::ZeroOffset => (0.0, params),
        }
    }
}

/// Model distance error for a fixated target `reach` metres along the reach
/// line: the reach position at the perceived cyclopean distance minus `reach`.
pub fn model_distance_error(reach: f64, ipd: f64, beta: f64, pose: &EyePose) -> Result<f64> {
    let h = 0.5 * ipd;
    let d = pose.cyclopean_distance(reach);
    let a = (h / d).atan() + 0.5 * beta;
    if !(a > 0.0 && a < std::f64::consts::FRAC_PI_2) {
        return Err(Error::domain(format!(
            "perturbed angle {a} rad outside (0, π/2)"
        )));
    }
    let perceived = h / a.tan();
    Ok(pose.reach_at_distance(perceived)? - reach)
}

/// Gradient of [`model_distance_error`] with respect to `(β, ipd)`.
pub fn model_gradient(reach: f64, ipd: f64, beta: f64, pose: &EyePose) -> Result<(f64, f64)> {
    let h = 0.5 * ipd;
    let d = pose.cyclopean_distance(reach);
    let a = (h / d).atan() + 0.5 * beta;
    let perceived = h / a.tan();
    let sin2 = a.sin().powi(2);
    let slope = pose.reach_slope(perceived);
    if !slope.is_finite() {
        return Err(Error::domain("perceived point off the reach line"));
    }
    let d_beta = -h / (2.0 * sin2);
    let d_h = 1.0 / a.tan() - h / sin2 * d / (d * d + h * h);
    Ok((slope * d_beta, slope * 0.5 * d_h))
}

/// The training-split least-squares problem for one model variant.
pub struct VacProblem {
    spec: ModelSpec,
    /// (participant index, reach, observed DE).
    rows: Vec<(usize, f64, f64)>,
    n_participants: usize,
}

impl VacProblem {
    pub fn new(spec: ModelSpec, data: &FitDataset, which: Split) -> Self {
        let participants = data.participants();
        let rows = data
            .subset(which)
            .map(|o| {
                let idx = participants
                    .binary_search(&o.participant_id)
                    .expect("participant list built from the same data");
                (idx, o.target_distance, o.distance_error)
            })
            .collect();
        Self {
            spec,
            rows,
            n_participants: participants.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.2)
    }
}

impl LeastSquaresProblem for VacProblem {
    fn num_params(&self) -> usize {
        self.spec.num_params(self.n_participants)
    }

    fn residuals(&self, params: &[f64]) -> Vec<f64> {
        let (beta, ipds) = self.spec.split_params(params);
        self.rows
            .iter()
            .map(|&(p, reach, de)| {
                model_distance_error(reach, ipds[p], beta, &self.spec.pose)
                    .map_or(f64::INFINITY, |m| de - m)
            })
            .collect()
    }

    fn jacobian(&self, params: &[f64]) -> DMatrix<f64> {
        let (beta, ipds) = self.spec.split_params(params);
        let offset = usize::from(self.spec.variant == Variant::WithOffset);
        let mut jac = DMatrix::zeros(self.rows.len(), self.num_params());
        for (i, &(p, reach, _)) in self.rows.iter().enumerate() {
            let (gb, gi) = model_gradient(reach, ipds[p], beta, &self.spec.pose)
                .unwrap_or((f64::NAN, f64::NAN));
            if offset == 1 {
                jac[(i, 0)] = -gb;
            }
            jac[(i, offset + p)] = -gi;
        }
        jac
    }

    fn project(&self, params: &mut [f64]) {
        let offset = usize::from(self.spec.variant == Variant::WithOffset);
        if offset == 1 {
            params[0] = params[0].clamp(-MAX_BETA, MAX_BETA);
        }
        for ipd in &mut params[offset..] {
            *ipd = ipd.clamp(IPD_MIN, IPD_MAX);
        }
    }
}

/// BIC and r² of one split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessOfFit {
    pub n: usize,
    pub rss: f64,
    pub bic: f64,
    pub r2: f64,
}

/// `BIC = n·ln(RSS/n) + k·ln n`, with `RSS/n` floored at the smallest
/// positive float so a perfect fit stays finite; `r² = 1 − RSS/TSS`.
pub fn goodness_of_fit(residuals: &[f64], observed: &[f64], k: usize) -> Result<GoodnessOfFit> {
    let n = residuals.len();
    if n <= k {
        return Err(Error::InsufficientSamples {
            needed: k + 1,
            got: n,
        });
    }
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let mean = observed.iter().sum::<f64>() / n as f64;
    let tss: f64 = observed.iter().map(|v| (v - mean).powi(2)).sum();
    let nf = n as f64;
    let bic = nf * (rss / nf).max(f64::MIN_POSITIVE).ln() + k as f64 * nf.ln();
    let r2 = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    Ok(GoodnessOfFit { n, rss, bic, r2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub variant: Variant,
    /// Vergence offset (rad); 0 for the zero-offset variant.
    pub beta: f64,
    pub participants: Vec<u32>,
    /// IPD per participant (m), same order as `participants`.
    pub ipds: Vec<f64>,
    pub num_params: usize,
    pub train: GoodnessOfFit,
    pub test: Option<GoodnessOfFit>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub warnings: Vec<String>,
}

/// Fits `spec` to the training split from `init` (or the neutral start:
/// β = 0, every IPD 63 mm) and scores both splits.
pub fn fit(spec: &ModelSpec, data: &FitDataset, init: Option<&[f64]>) -> Result<FitResult> {
    fit_with_options(spec, data, init, &LmOptions::default())
}

pub fn fit_with_options(
    spec: &ModelSpec,
    data: &FitDataset,
    init: Option<&[f64]>,
    options: &LmOptions,
) -> Result<FitResult> {
    let participants = data.participants();
    let k = spec.num_params(participants.len());
    let default_init = spec.initial_params(participants.len());
    let init = init.unwrap_or(&default_init);

    let train = VacProblem::new(*spec, data, Split::Train);
    let report = levenberg_marquardt(&train, init, options)?;
    let observed: Vec<f64> = train.observed().collect();
    let train_gof = goodness_of_fit(&train.residuals(&report.params), &observed, k)?;

    let test = VacProblem::new(*spec, data, Split::Test);
    let test_gof = if test.is_empty() {
        None
    } else {
        let observed: Vec<f64> = test.observed().collect();
        Some(goodness_of_fit(
            &test.residuals(&report.params),
            &observed,
            k,
        )?)
    };

    let (beta, ipds) = spec.split_params(&report.params);
    Ok(FitResult {
        variant: spec.variant,
        beta,
        participants,
        ipds: ipds.to_vec(),
        num_params: k,
        train: train_gof,
        test: test_gof,
        iterations: report.iterations,
        converged: report.converged(),
        termination: report.termination,
        warnings: data.identifiability_warnings(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::dataset::Observation;
    use crate::fitting::lm::finite_difference_jacobian;
    use crate::geometry::EyeGeometry;
    use crate::perception::{predict_reach_endpoint, PerturbationParams};

    const BETA: f64 = 0.22 * std::f64::consts::PI / 180.0;

    fn exact_data(ipds: &[f64], beta: f64) -> FitDataset {
        let pose = EyePose::default();
        let mut obs = Vec::new();
        for (p, &ipd) in ipds.iter().enumerate() {
            for d in [0.20, 0.25, 0.30] {
                for _ in 0..6 {
                    obs.push(Observation {
                        participant_id: p as u32 + 1,
                        condition: "original".into(),
                        target_distance: d,
                        distance_error: model_distance_error(d, ipd, beta, &pose).unwrap(),
                    });
                }
            }
        }
        FitDataset::new(obs, 0.7, 3).unwrap()
    }

    #[test]
    fn model_matches_endpoint_prediction() {
        let pose = EyePose::default();
        let eyes = EyeGeometry::new(0.063).unwrap();
        let params = PerturbationParams::new(BETA).unwrap();
        for r in [0.2, 0.25, 0.3, 0.35] {
            let p = predict_reach_endpoint(r, &params, &eyes, &pose).unwrap();
            let m = model_distance_error(r, 0.063, BETA, &pose).unwrap();
            assert!((p.endpoint_error - m).abs() < 1e-12);
        }
        assert!(model_distance_error(0.25, 0.063, 0.0, &pose).unwrap().abs() < 1e-15);
    }

    #[test]
    fn residual_signs() {
        let ipds = [0.060, 0.066];
        let data = exact_data(&ipds, BETA);
        let spec = ModelSpec::new(Variant::WithOffset, EyePose::default());
        let prob = VacProblem::new(spec, &data, Split::Train);
        let truth = [BETA, 0.060, 0.066];
        assert!(prob.residuals(&truth).iter().all(|r| r.abs() < 1e-15));
        // larger offset predicts more undershoot than observed
        let more = [BETA + 0.1f64.to_radians(), 0.060, 0.066];
        assert!(prob.residuals(&more).iter().all(|&r| r > 0.0));
        // zero-offset predicts no error at all, so residuals equal the data
        let zero = VacProblem::new(
            ModelSpec::new(Variant::ZeroOffset, EyePose::default()),
            &data,
            Split::Train,
        );
        let r = zero.residuals(&[0.060, 0.066]);
        assert!(r
            .iter()
            .zip(zero.observed())
            .all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let data = exact_data(&[0.058, 0.063, 0.070], BETA);
        let spec = ModelSpec::new(Variant::WithOffset, EyePose::default());
        let prob = VacProblem::new(spec, &data, Split::Train);
        for p in [
            [BETA, 0.058, 0.063, 0.070],
            [-0.01, 0.05, 0.075, 0.062],
            [0.03, 0.079, 0.046, 0.06],
        ] {
            let an = prob.jacobian(&p);
            let fd = finite_difference_jacobian(&prob, &p, 1e-7);
            let scale = an.abs().max();
            assert!((an - fd).abs().max() / scale < 1e-5);
        }
    }

    #[test]
    fn noise_free_recovery() {
        let ipds = [0.058, 0.061, 0.064, 0.067];
        let data = exact_data(&ipds, BETA);
        let spec = ModelSpec::new(Variant::WithOffset, EyePose::default());
        let res = fit(&spec, &data, None).unwrap();
        assert!(res.converged);
        assert!((res.beta - BETA).abs() < 1e-8);
        for (a, b) in res.ipds.iter().zip(ipds) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(res.train.r2 > 1.0 - 1e-9 && res.train.r2 <= 1.0);
        assert!(res.train.bic.is_finite());
        assert_eq!(res.num_params, 5);
        assert!(res.warnings.is_empty());

        let corner = [MAX_BETA, IPD_MAX, IPD_MIN, IPD_MAX, IPD_MIN];
        let res2 = fit(&spec, &data, Some(&corner)).unwrap();
        assert!((res2.beta - res.beta).abs() < 1e-6);
    }

    #[test]
    fn gof() {
        let g = goodness_of_fit(&[0.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0], 2).unwrap();
        assert_eq!(g.r2, 1.0);
        assert!(g.bic.is_finite());
        let g = goodness_of_fit(&[1.0, -1.0, 1.0, -1.0], &[0.0, 2.0, 0.0, 2.0], 1).unwrap();
        let expect = 4.0 * 1.0f64.ln() + 4.0f64.ln();
        assert!((g.bic - expect).abs() < 1e-12);
        assert_eq!(g.r2, 0.0);
        assert!(goodness_of_fit(&[0.0; 2], &[0.0; 2], 2).is_err());
    }
}
