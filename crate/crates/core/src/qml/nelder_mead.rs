use serde::{Deserialize, Serialize};

use super::QmlError;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NelderMeadOptions {
    /// Offset of the initial simplex vertices along each axis.
    pub initial_step: f64,
    /// Stop when `max f − min f` over the simplex drops below this.
    pub tol: f64,
    /// Iteration budget shared by all restarts.
    pub max_iter: usize,
    /// Fresh simplices built around the incumbent after convergence; a
    /// restart that improves by less than `tol` ends the search.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.5,
            tol: 1e-10,
            max_iter: 50_000,
            restarts: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counter<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<F> {
    fn call(&mut self, x: &[f64]) -> Result<f64, QmlError> {
        self.evals += 1;
        let v = (self.f)(x);
        if !v.is_finite() {
            return Err(QmlError::Diverged(format!("objective returned {v} at evaluation {}", self.evals)));
        }
        Ok(v)
    }
}

/// Minimizes `f` with the Nelder–Mead simplex method (reflection 1,
/// expansion 2, contraction 0.5, shrink 0.5).
pub fn nelder_mead<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadResult, QmlError>
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    if d == 0 {
        return Err(QmlError::InvalidArgument("Nelder–Mead needs at least one dimension".into()));
    }
    let mut obj = Counter { f, evals: 0 };
    let mut best_x = x0.to_vec();
    let mut best_f = obj.call(x0)?;
    let mut iterations = 0;
    let mut converged = false;

    for round in 0..=opts.restarts {
        let start_f = best_f;
        let (x, fx, done) = run_simplex(&mut obj, &best_x, best_f, opts, &mut iterations)?;
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = done;
        if !done || iterations >= opts.max_iter {
            break;
        }
        if round > 0 && start_f - best_f < opts.tol {
            break;
        }
    }
    Ok(NelderMeadResult {
        x: best_x,
        f: best_f,
        iterations,
        evaluations: obj.evals,
        converged,
    })
}

fn run_simplex<F: FnMut(&[f64]) -> f64>(
    obj: &mut Counter<F>,
    x0: &[f64],
    f0: f64,
    opts: &NelderMeadOptions,
    iterations: &mut usize,
) -> Result<(Vec<f64>, f64, bool), QmlError> {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..d {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        let fv = obj.call(&v)?;
        simplex.push((v, fv));
    }

    let mut centroid = vec![0.0; d];
    let point = |c: &[f64], toward: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(toward).map(|(ci, ti)| ci + t * (ti - ci)).collect()
    };

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_best, f_worst) = (simplex[0].1, simplex[d].1);
        if f_worst - f_best < opts.tol {
            let (x, f) = simplex.swap_remove(0);
            return Ok((x, f, true));
        }
        if *iterations >= opts.max_iter {
            let (x, f) = simplex.swap_remove(0);
            return Ok((x, f, false));
        }
        *iterations += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (v, _) in &simplex[..d] {
            centroid.iter_mut().zip(v).for_each(|(c, x)| *c += x / d as f64);
        }
        let f_second = simplex[d - 1].1;
        let worst = simplex[d].0.clone();

        // c + t (worst − c): t = −1 reflects, −2 expands, ±0.5 contracts
        let reflected = point(&centroid, &worst, -REFLECT);
        let f_r = obj.call(&reflected)?;

        if f_r < f_best {
            let expanded = point(&centroid, &worst, -EXPAND);
            let f_e = obj.call(&expanded)?;
            simplex[d] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
            continue;
        }
        if f_r < f_second {
            simplex[d] = (reflected, f_r);
            continue;
        }
        let (contracted, accept) = if f_r < f_worst {
            let c = point(&centroid, &worst, -REFLECT * CONTRACT);
            let f_c = obj.call(&c)?;
            ((c, f_c), f_c <= f_r)
        } else {
            let c = point(&centroid, &worst, CONTRACT);
            let f_c = obj.call(&c)?;
            ((c, f_c), f_c < f_worst)
        };
        if accept {
            simplex[d] = contracted;
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            *v = point(&anchor, v, SHRINK);
            *fv = obj.call(v)?;
        }
    }
}
