//! Nelder–Mead downhill simplex with dimension-adaptive coefficients
//! (Gao & Han, 2012). Minimises; non-finite objective values rank last.

#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    #[allow(dead_code)]
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// `steps[i]` is the initial edge length along coordinate `i`.
pub(crate) fn minimize<F>(f: F, x0: &[f64], steps: &[f64], tol: f64, max_iter: usize) -> SimplexOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    if dim == 0 {
        return SimplexOutcome {
            x: Vec::new(),
            value: sanitize(f(x0)),
            iterations: 0,
            converged: true,
        };
    }
    let nf = dim as f64;
    let (alpha, gamma, rho, sigma) = if dim >= 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    pts.push(x0.to_vec());
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| sanitize(f(p))).collect();

    let mut iterations = 0;
    let mut converged = false;
    let mut order: Vec<usize> = (0..=dim).collect();
    while iterations < max_iter {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        let best = order[0];
        let worst = order[dim];
        let second = order[dim - 1];

        let f_spread = (vals[worst] - vals[best]).abs();
        let x_spread = pts
            .iter()
            .flat_map(|p| p.iter().zip(&pts[best]).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())))
            .fold(0.0, f64::max);
        if vals[best].is_finite() && f_spread <= tol * (1.0 + vals[best].abs()) && x_spread <= tol.sqrt() {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for &i in order.iter().take(dim) {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x / nf;
            }
        }
        let along = |coef: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[worst])
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = sanitize(f(&xr));
        if fr < vals[best] {
            let xe = along(alpha * gamma);
            let fe = sanitize(f(&xe));
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[worst] {
            let xc = along(alpha * rho);
            let fc = sanitize(f(&xc));
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = sanitize(f(&xc));
            (xc, fc)
        };
        if fc < fr.min(vals[worst]) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        // shrink toward the best vertex
        let anchor = pts[best].clone();
        for i in 0..=dim {
            if i == best {
                continue;
            }
            for (x, a) in pts[i].iter_mut().zip(&anchor) {
                *x = a + sigma * (*x - a);
            }
            vals[i] = sanitize(f(&pts[i]));
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)))
        .unwrap();
    SimplexOutcome {
        x: pts[best].clone(),
        value: vals[best],
        iterations,
        converged,
    }
}
