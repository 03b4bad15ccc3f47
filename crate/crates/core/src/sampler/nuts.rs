//! Multinomial dynamic HMC with trajectory doubling and the generalized
//! no-U-turn criterion, under a diagonal Euclidean metric.

use rand::Rng;
use rand_distr::StandardNormal;

use super::LogDensity;

/// Energy error above which a leapfrog step is flagged divergent.
pub const MAX_ENERGY_ERROR: f64 = 1000.0;

#[derive(Debug, Clone)]
pub struct Point {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl Point {
    pub fn new<T: LogDensity + ?Sized>(target: &T, q: Vec<f64>) -> Self {
        let mut grad = vec![0.0; q.len()];
        let logp = target.log_density_and_grad(&q, &mut grad);
        let p = vec![0.0; q.len()];
        Point { q, p, grad, logp }
    }
}

#[derive(Debug, Clone)]
pub struct Metric {
    pub inv_mass: Vec<f64>,
}

impl Metric {
    pub fn unit(dim: usize) -> Self {
        Metric {
            inv_mass: vec![1.0; dim],
        }
    }

    pub fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p
            .iter()
            .zip(&self.inv_mass)
            .map(|(p, m)| p * p * m)
            .sum::<f64>()
    }

    pub fn energy(&self, z: &Point) -> f64 {
        let h = -z.logp + self.kinetic(&z.p);
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    pub fn sharp(&self, p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.inv_mass).map(|(p, m)| p * m).collect()
    }

    pub fn sample_momentum<R: Rng + ?Sized>(&self, rng: &mut R, p: &mut [f64]) {
        for (pi, m) in p.iter_mut().zip(&self.inv_mass) {
            let z: f64 = rng.sample(StandardNormal);
            *pi = z / m.sqrt();
        }
    }
}

pub fn leapfrog<T: LogDensity + ?Sized>(target: &T, metric: &Metric, z: &mut Point, eps: f64) {
    for (p, g) in z.p.iter_mut().zip(&z.grad) {
        *p += 0.5 * eps * g;
    }
    for ((q, p), m) in z.q.iter_mut().zip(&z.p).zip(&metric.inv_mass) {
        *q += eps * m * p;
    }
    z.logp = target.log_density_and_grad(&z.q, &mut z.grad);
    for (p, g) in z.p.iter_mut().zip(&z.grad) {
        *p += 0.5 * eps * g;
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub point: Point,
    pub accept_stat: f64,
    pub n_leapfrog: u64,
    pub depth: u32,
    pub divergent: bool,
    /// Energy of the selected state minus the initial energy.
    pub energy_error: f64,
}

struct TreeBuilder<'a, T: ?Sized, R: ?Sized> {
    target: &'a T,
    metric: &'a Metric,
    eps: f64,
    h0: f64,
    rng: &'a mut R,
    n_leapfrog: u64,
    sum_metro_prob: f64,
    divergent: bool,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    for (a, v) in acc.iter_mut().zip(x) {
        *a += v;
    }
}

fn sum(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

impl<T: LogDensity + ?Sized, R: Rng + ?Sized> TreeBuilder<'_, T, R> {
    #[allow(clippy::too_many_arguments)]
    fn build(
        &mut self,
        depth: u32,
        z: &mut Point,
        z_propose: &mut Point,
        p_sharp_beg: &mut Vec<f64>,
        p_sharp_end: &mut Vec<f64>,
        rho: &mut [f64],
        p_beg: &mut Vec<f64>,
        p_end: &mut Vec<f64>,
        sign: f64,
        log_sum_weight: &mut f64,
    ) -> bool {
        if depth == 0 {
            leapfrog(self.target, self.metric, z, sign * self.eps);
            self.n_leapfrog += 1;
            let h = self.metric.energy(z);
            if h - self.h0 > MAX_ENERGY_ERROR {
                self.divergent = true;
            }
            *log_sum_weight = log_add_exp(*log_sum_weight, self.h0 - h);
            self.sum_metro_prob += if self.h0 - h > 0.0 {
                1.0
            } else {
                (self.h0 - h).exp()
            };
            z_propose.clone_from(z);
            *p_sharp_beg = self.metric.sharp(&z.p);
            p_sharp_end.clone_from(p_sharp_beg);
            add_into(rho, &z.p);
            p_beg.clone_from(&z.p);
            p_end.clone_from(p_beg);
            return !self.divergent;
        }

        let dim = z.q.len();
        let mut log_sum_weight_init = f64::NEG_INFINITY;
        let mut p_init_end = vec![0.0; dim];
        let mut p_sharp_init_end = vec![0.0; dim];
        let mut rho_init = vec![0.0; dim];
        if !self.build(
            depth - 1,
            z,
            z_propose,
            p_sharp_beg,
            &mut p_sharp_init_end,
            &mut rho_init,
            p_beg,
            &mut p_init_end,
            sign,
            &mut log_sum_weight_init,
        ) {
            return false;
        }

        let mut z_propose_final = z.clone();
        let mut log_sum_weight_final = f64::NEG_INFINITY;
        let mut p_final_beg = vec![0.0; dim];
        let mut p_sharp_final_beg = vec![0.0; dim];
        let mut rho_final = vec![0.0; dim];
        if !self.build(
            depth - 1,
            z,
            &mut z_propose_final,
            &mut p_sharp_final_beg,
            p_sharp_end,
            &mut rho_final,
            &mut p_final_beg,
            p_end,
            sign,
            &mut log_sum_weight_final,
        ) {
            return false;
        }

        // Uniform multinomial choice between the two halves.
        let log_sum_weight_subtree = log_add_exp(log_sum_weight_init, log_sum_weight_final);
        *log_sum_weight = log_add_exp(*log_sum_weight, log_sum_weight_subtree);
        let accept = (log_sum_weight_final - log_sum_weight_subtree).exp();
        if self.rng.random::<f64>() < accept {
            *z_propose = z_propose_final;
        }

        let rho_subtree = sum(&rho_init, &rho_final);
        add_into(rho, &rho_subtree);

        let mut persist = no_u_turn(p_sharp_beg, p_sharp_end, &rho_subtree);
        let rho_ext = sum(&rho_init, &p_final_beg);
        persist &= no_u_turn(p_sharp_beg, &p_sharp_final_beg, &rho_ext);
        let rho_ext = sum(&rho_final, &p_init_end);
        persist &= no_u_turn(&p_sharp_init_end, p_sharp_end, &rho_ext);
        persist
    }
}

/// One dynamic-HMC transition from `start`.
pub fn transition<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    metric: &Metric,
    start: &Point,
    eps: f64,
    max_depth: u32,
    rng: &mut R,
) -> Transition {
    let dim = start.q.len();
    let mut z0 = start.clone();
    metric.sample_momentum(rng, &mut z0.p);
    let h0 = metric.energy(&z0);

    let mut z_fwd = z0.clone();
    let mut z_bwd = z0.clone();
    let mut z_sample = z0.clone();
    let mut z_propose = z0.clone();

    let mut p_fwd_fwd = z0.p.clone();
    let mut p_sharp_fwd_fwd = metric.sharp(&z0.p);
    let mut p_fwd_bwd = z0.p.clone();
    let mut p_sharp_fwd_bwd = p_sharp_fwd_fwd.clone();
    let mut p_bwd_fwd = z0.p.clone();
    let mut p_sharp_bwd_fwd = p_sharp_fwd_fwd.clone();
    let mut p_bwd_bwd = z0.p.clone();
    let mut p_sharp_bwd_bwd = p_sharp_fwd_fwd.clone();

    let mut rho = z0.p.clone();
    let mut log_sum_weight = 0.0;
    let mut depth = 0;

    let mut tb = TreeBuilder {
        target,
        metric,
        eps,
        h0,
        rng,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        divergent: false,
    };

    while depth < max_depth {
        let mut rho_fwd = vec![0.0; dim];
        let mut rho_bwd = vec![0.0; dim];
        let mut log_sum_weight_subtree = f64::NEG_INFINITY;

        let valid = if tb.rng.random::<f64>() > 0.5 {
            rho_bwd.clone_from(&rho);
            p_bwd_fwd.clone_from(&p_fwd_bwd);
            p_sharp_bwd_fwd.clone_from(&p_sharp_fwd_bwd);
            let mut z = z_fwd.clone();
            let ok = tb.build(
                depth,
                &mut z,
                &mut z_propose,
                &mut p_sharp_fwd_bwd,
                &mut p_sharp_fwd_fwd,
                &mut rho_fwd,
                &mut p_fwd_bwd,
                &mut p_fwd_fwd,
                1.0,
                &mut log_sum_weight_subtree,
            );
            z_fwd = z;
            ok
        } else {
            rho_fwd.clone_from(&rho);
            p_fwd_bwd.clone_from(&p_bwd_fwd);
            p_sharp_fwd_bwd.clone_from(&p_sharp_bwd_fwd);
            let mut z = z_bwd.clone();
            let ok = tb.build(
                depth,
                &mut z,
                &mut z_propose,
                &mut p_sharp_bwd_fwd,
                &mut p_sharp_bwd_bwd,
                &mut rho_bwd,
                &mut p_bwd_fwd,
                &mut p_bwd_bwd,
                -1.0,
                &mut log_sum_weight_subtree,
            );
            z_bwd = z;
            ok
        };

        if !valid {
            break;
        }
        depth += 1;

        // Biased progressive sampling toward the new subtree.
        if log_sum_weight_subtree > log_sum_weight {
            z_sample.clone_from(&z_propose);
        } else {
            let accept = (log_sum_weight_subtree - log_sum_weight).exp();
            if tb.rng.random::<f64>() < accept {
                z_sample.clone_from(&z_propose);
            }
        }
        log_sum_weight = log_add_exp(log_sum_weight, log_sum_weight_subtree);

        rho = sum(&rho_bwd, &rho_fwd);
        let mut persist = no_u_turn(&p_sharp_bwd_bwd, &p_sharp_fwd_fwd, &rho);
        let rho_ext = sum(&rho_bwd, &p_fwd_bwd);
        persist &= no_u_turn(&p_sharp_bwd_bwd, &p_sharp_fwd_bwd, &rho_ext);
        let rho_ext = sum(&rho_fwd, &p_bwd_fwd);
        persist &= no_u_turn(&p_sharp_bwd_fwd, &p_sharp_fwd_fwd, &rho_ext);
        if !persist {
            break;
        }
    }

    let n_leapfrog = tb.n_leapfrog.max(1);
    let accept_stat = tb.sum_metro_prob / n_leapfrog as f64;
    let divergent = tb.divergent;
    let energy_error = metric.energy(&z_sample) - h0;
    Transition {
        point: z_sample,
        accept_stat,
        n_leapfrog: tb.n_leapfrog,
        depth,
        divergent,
        energy_error,
    }
}

/// Doubles or halves `eps` until a single leapfrog step's acceptance
/// probability crosses 0.8.
pub fn initial_step_size<T: LogDensity + ?Sized, R: Rng + ?Sized>(
    target: &T,
    metric: &Metric,
    start: &Point,
    mut eps: f64,
    rng: &mut R,
) -> f64 {
    let log_target = 0.8f64.ln();
    let probe = |eps: f64, rng: &mut R| {
        let mut z = start.clone();
        metric.sample_momentum(rng, &mut z.p);
        let h0 = metric.energy(&z);
        leapfrog(target, metric, &mut z, eps);
        let dh = h0 - metric.energy(&z);
        if dh.is_nan() {
            f64::NEG_INFINITY
        } else {
            dh
        }
    };
    let direction = if probe(eps, rng) > log_target { 1 } else { -1 };
    for _ in 0..100 {
        eps = if direction == 1 { 2.0 * eps } else { 0.5 * eps };
        if !(1e-8..=1e7).contains(&eps) {
            break;
        }
        let dh = probe(eps, rng);
        if direction == 1 && dh <= log_target {
            break;
        }
        if direction == -1 && dh >= log_target {
            break;
        }
    }
    eps.clamp(1e-8, 1e7)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::StdNormalTarget;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn leapfrog_is_reversible() {
        let target = StdNormalTarget { dim: 5 };
        let metric = Metric {
            inv_mass: vec![1.0, 0.5, 2.0, 1.5, 0.8],
        };
        let mut z = Point::new(&target, vec![0.3, -1.2, 0.8, 2.0, -0.4]);
        z.p = vec![0.5, -0.1, 0.9, -1.3, 0.2];
        let start = z.clone();
        for _ in 0..50 {
            leapfrog(&target, &metric, &mut z, 0.1);
        }
        for p in z.p.iter_mut() {
            *p = -*p;
        }
        for _ in 0..50 {
            leapfrog(&target, &metric, &mut z, 0.1);
        }
        for i in 0..5 {
            assert!((z.q[i] - start.q[i]).abs() < 1e-8);
            assert!((-z.p[i] - start.p[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn transition_moves_and_reports() {
        let target = StdNormalTarget { dim: 3 };
        let metric = Metric::unit(3);
        let start = Point::new(&target, vec![0.5, 0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = transition(&target, &metric, &start, 0.5, 10, &mut rng);
        assert!(t.n_leapfrog >= 1);
        assert!(!t.divergent);
        assert!((0.0..=1.0).contains(&t.accept_stat));
        assert_ne!(t.point.q, start.q);
    }

    #[test]
    fn huge_step_diverges() {
        let target = StdNormalTarget { dim: 2 };
        let metric = Metric::unit(2);
        let start = Point::new(&target, vec![1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = transition(&target, &metric, &start, 200.0, 10, &mut rng);
        assert!(t.divergent);
        assert_eq!(t.point.q, start.q);
    }

    #[test]
    fn initial_step_size_is_reasonable() {
        let target = StdNormalTarget { dim: 4 };
        let metric = Metric::unit(4);
        let start = Point::new(&target, vec![0.1; 4]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let eps = initial_step_size(&target, &metric, &start, 1e-3, &mut rng);
        assert!(eps > 0.1 && eps < 10.0, "eps = {eps}");
    }
}
