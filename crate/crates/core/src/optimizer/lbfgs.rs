//! Limited-memory BFGS with Armijo backtracking.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::Result;
use crate::math::{dot, norm_inf};

/// Smallest step the backtracking search will try.
const MIN_STEP: f64 = 1e-16;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Settings {
    pub memory: usize,
    pub max_iter: usize,
    pub tol_grad: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub line_search_failed: bool,
}

struct History {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    memory: usize,
}

impl History {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        // Armijo alone does not enforce curvature; skip pairs that would
        // break positive definiteness.
        if !(sy > 1e-12 * libm::sqrt(dot(&s, &s) * dot(&y, &y))) {
            return;
        }
        if self.memory == 0 {
            return;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: returns `-H g`.
    fn direction(&self, g: &[f64]) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let scale = match self.pairs.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => 1.0 / norm_inf(g).max(1.0),
        };
        for qi in q.iter_mut() {
            *qi *= scale;
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter().map(|v| -v).collect()
    }
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub(crate) fn minimize<F>(mut f: F, x0: Vec<f64>, settings: &Settings) -> Result<Outcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut x = x0;
    let (mut fx, mut g) = f(&x)?;
    let mut history = History {
        pairs: VecDeque::new(),
        memory: settings.memory,
    };
    let mut iterations = 0;
    let mut line_search_failed = false;

    while iterations < settings.max_iter {
        if norm_inf(&g) <= settings.tol_grad {
            return Ok(Outcome {
                x,
                value: fx,
                iterations,
                converged: true,
                line_search_failed,
            });
        }
        let mut dir = history.direction(&g);
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            history.pairs.clear();
            dir = history.direction(&g);
            slope = dot(&g, &dir);
        }

        let accepted = loop {
            match line_search(&mut f, &x, fx, &dir, slope, settings)? {
                Some(step) => break Some(step),
                None if !history.pairs.is_empty() => {
                    history.pairs.clear();
                    dir = history.direction(&g);
                    slope = dot(&g, &dir);
                }
                None => break None,
            }
        };
        let Some((x_new, f_new, g_new)) = accepted else {
            line_search_failed = true;
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        history.push(s, y);
        x = x_new;
        fx = f_new;
        g = g_new;
        iterations += 1;
    }

    let converged = norm_inf(&g) <= settings.tol_grad;
    Ok(Outcome {
        x,
        value: fx,
        iterations,
        converged,
        line_search_failed,
    })
}

type Step = (Vec<f64>, f64, Vec<f64>);

fn line_search<F>(f: &mut F, x: &[f64], fx: f64, dir: &[f64], slope: f64, settings: &Settings) -> Result<Option<Step>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut t = 1.0;
    while t >= MIN_STEP {
        let cand: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + t * di).collect();
        let (fc, gc) = f(&cand)?;
        if fc.is_finite() && fc <= fx + settings.armijo_c * t * slope && fc <= fx {
            return Ok(Some((cand, fc, gc)));
        }
        t *= settings.backtrack_factor;
    }
    Ok(None)
}
