//! Bounded Nelder–Mead simplex search and a golden-section line search.

/// Box bounds; points are clamped into them before every evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Clone, Debug)]
pub struct NelderMead {
    pub max_evaluations: usize,
    /// Stop once the spread of simplex values falls below this.
    pub f_tolerance: f64,
    /// Stop once the simplex diameter falls below this.
    pub x_tolerance: f64,
    /// Initial step per coordinate, as a fraction of the bound width.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_evaluations: 2000, f_tolerance: 1e-15, x_tolerance: 1e-12, initial_step: 0.05 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

impl NelderMead {
    /// Minimises `f` starting from `start`.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, start: &[f64], bounds: &Bounds) -> Minimum {
        let n = start.len();
        let evaluations = std::cell::Cell::new(0usize);
        let mut eval = |x: &mut Vec<f64>| {
            bounds.clamp(x);
            evaluations.set(evaluations.get() + 1);
            f(x)
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let mut x0 = start.to_vec();
        let f0 = eval(&mut x0);
        simplex.push((x0.clone(), f0));
        for i in 0..n {
            let width = bounds.upper[i] - bounds.lower[i];
            if width == 0.0 {
                continue;
            }
            let mut x = x0.clone();
            let step = self.initial_step * width;
            x[i] = if x[i] + step <= bounds.upper[i] { x[i] + step } else { x[i] - step };
            let fx = eval(&mut x);
            simplex.push((x, fx));
        }
        // fixed coordinates leave a lower-dimensional simplex
        let k = simplex.len() - 1;
        if k == 0 {
            return Minimum { x: x0, value: f0, evaluations: 1 };
        }

        while evaluations.get() < self.max_evaluations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[k].1;
            let diameter = simplex
                .iter()
                .skip(1)
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if (worst - best).abs() <= self.f_tolerance || diameter <= self.x_tolerance {
                break;
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..k] {
                for (c, v) in centroid.iter_mut().zip(x) {
                    *c += v / k as f64;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[k].0).map(|(c, w)| c + t * (w - c)).collect()
            };

            let mut reflected = along(-1.0);
            let fr = eval(&mut reflected);
            if fr < simplex[0].1 {
                let mut expanded = along(-2.0);
                let fe = eval(&mut expanded);
                simplex[k] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[k - 1].1 {
                simplex[k] = (reflected, fr);
            } else {
                let outside = fr < simplex[k].1;
                let mut contracted = if outside { along(-0.5) } else { along(0.5) };
                let fc = eval(&mut contracted);
                if fc < fr.min(simplex[k].1) {
                    simplex[k] = (contracted, fc);
                } else {
                    let anchor = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        let mut x: Vec<f64> =
                            anchor.iter().zip(&entry.0).map(|(a, b)| a + 0.5 * (b - a)).collect();
                        let fx = eval(&mut x);
                        *entry = (x, fx);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum { x, value, evaluations: evaluations.get() }
    }
}

/// Golden-section search for the maximum of a unimodal `f` on [a, b].
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
