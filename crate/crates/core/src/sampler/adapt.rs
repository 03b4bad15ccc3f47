//! Warmup adaptation: dual-averaging step size and diagonal mass matrix.

#[derive(Debug, Clone, Copy)]
pub struct DualAverageSettings {
    pub target: f64,
    pub k: f64,
    pub t0: f64,
    pub gamma: f64,
}

impl Default for DualAverageSettings {
    fn default() -> Self {
        DualAverageSettings {
            target: 0.8,
            k: 0.75,
            t0: 10.0,
            gamma: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualAverage {
    log_step: f64,
    log_step_adapt: f64,
    hbar: f64,
    mu: f64,
    count: u64,
    settings: DualAverageSettings,
}

impl DualAverage {
    pub fn new(settings: DualAverageSettings, initial_step: f64) -> Self {
        DualAverage {
            log_step: initial_step.ln(),
            log_step_adapt: initial_step.ln(),
            hbar: 0.0,
            mu: (10.0 * initial_step).ln(),
            count: 1,
            settings,
        }
    }

    pub fn advance(&mut self, accept_stat: f64) {
        let accept_stat = if accept_stat.is_finite() {
            accept_stat
        } else {
            0.0
        };
        let n = self.count as f64;
        let w = 1.0 / (n + self.settings.t0);
        self.hbar = (1.0 - w) * self.hbar + w * (self.settings.target - accept_stat);
        self.log_step = self.mu - self.hbar * n.sqrt() / self.settings.gamma;
        let mk = n.powf(-self.settings.k);
        self.log_step_adapt = mk * self.log_step + (1.0 - mk) * self.log_step_adapt;
        self.count += 1;
    }

    pub fn current_step_size(&self) -> f64 {
        self.log_step.exp()
    }

    pub fn adapted_step_size(&self) -> f64 {
        self.log_step_adapt.exp()
    }
}

/// Running per-coordinate variance (Welford).
#[derive(Debug, Clone)]
pub struct VarianceEstimator {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl VarianceEstimator {
    pub fn new(dim: usize) -> Self {
        VarianceEstimator {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn add(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Sample variance shrunk toward `1e-3` (windowed adaptation).
    pub fn regularized(&self) -> Option<Vec<f64>> {
        if self.n < 3 {
            return None;
        }
        let n = self.n as f64;
        Some(
            self.m2
                .iter()
                .map(|s| {
                    let var = s / (n - 1.0);
                    (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
                })
                .collect(),
        )
    }
}
