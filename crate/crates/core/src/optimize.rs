//! Box-constrained Nelder–Mead simplex search.
//!
//! Trial points are projected onto the box before evaluation, so the simplex
//! can settle onto a face of the box (several fitted parameters sit at 0 or
//! 1). Non-finite objective values compare as `+inf`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub max_iterations: usize,
    /// Stop once every vertex is within this (max-norm) distance of the best.
    pub diameter_tolerance: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_iterations: 2000,
            diameter_tolerance: 1e-8,
            initial_step: 0.1,
            lower: 0.0,
            upper: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<const D: usize> {
    pub point: [f64; D],
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

impl NelderMead {
    fn project<const D: usize>(&self, mut x: [f64; D]) -> [f64; D] {
        for v in &mut x {
            *v = v.clamp(self.lower, self.upper);
        }
        x
    }

    fn initial_simplex<const D: usize>(&self, start: [f64; D]) -> Vec<[f64; D]> {
        let start = self.project(start);
        let mut simplex = vec![start];
        for d in 0..D {
            let mut x = start;
            // Step inward when the start sits on the upper face.
            x[d] = if x[d] + self.initial_step <= self.upper {
                x[d] + self.initial_step
            } else {
                x[d] - self.initial_step
            };
            simplex.push(self.project(x));
        }
        simplex
    }

    pub fn minimize<const D: usize, F>(&self, objective: F, start: [f64; D]) -> Minimum<D>
    where
        F: Fn(&[f64; D]) -> f64,
    {
        let mut evaluations = 0usize;
        let mut eval = |x: &[f64; D]| {
            evaluations += 1;
            sanitize(objective(x))
        };

        let mut simplex: Vec<([f64; D], f64)> = self
            .initial_simplex(start)
            .into_iter()
            .map(|x| {
                let v = eval(&x);
                (x, v)
            })
            .collect();

        let mut iterations = 0;
        let mut converged = false;
        loop {
            simplex.sort_by(|x, y| x.1.total_cmp(&y.1).then_with(|| lex_cmp(&x.0, &y.0)));
            let best = simplex[0].0;
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| max_norm_distance(x, &best))
                .fold(0.0, f64::max);
            if diameter < self.diameter_tolerance {
                converged = true;
                break;
            }
            if iterations >= self.max_iterations {
                break;
            }
            iterations += 1;

            let worst = simplex[D];
            let mut centroid = [0.0; D];
            for (x, _) in &simplex[..D] {
                for d in 0..D {
                    centroid[d] += x[d] / D as f64;
                }
            }
            let along = |t: f64| -> [f64; D] {
                let mut p = [0.0; D];
                for d in 0..D {
                    p[d] = centroid[d] + t * (worst.0[d] - centroid[d]);
                }
                self.project(p)
            };

            let reflected = along(-REFLECT);
            let fr = eval(&reflected);
            if fr < simplex[0].1 {
                let expanded = along(-EXPAND);
                let fe = eval(&expanded);
                simplex[D] = if fe < fr {
                    (expanded, fe)
                } else {
                    (reflected, fr)
                };
                continue;
            }
            if fr < simplex[D - 1].1 {
                simplex[D] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if fr < worst.1 {
                let x = along(-CONTRACT);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(CONTRACT);
                let v = eval(&x);
                (x, v)
            };
            if fc < worst.1.min(fr) {
                simplex[D] = (contracted, fc);
                continue;
            }
            let anchor = simplex[0].0;
            for vertex in simplex.iter_mut().skip(1) {
                let mut x = vertex.0;
                for d in 0..D {
                    x[d] = anchor[d] + SHRINK * (x[d] - anchor[d]);
                }
                let x = self.project(x);
                *vertex = (x, eval(&x));
            }
        }

        let (point, value) = simplex[0];
        Minimum {
            point,
            value,
            iterations,
            evaluations,
            converged,
        }
    }
}

fn max_norm_distance<const D: usize>(x: &[f64; D], y: &[f64; D]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn lex_cmp<const D: usize>(x: &[f64; D], y: &[f64; D]) -> std::cmp::Ordering {
    for (a, b) in x.iter().zip(y) {
        match a.total_cmp(b) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}
