/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Adam {
    pub fn new(parameters: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: vec![0.0; parameters],
            second: vec![0.0; parameters],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Descends along `gradient` in place.
    pub fn update(&mut self, params: &mut [f64], gradient: &[f64]) {
        assert_eq!(params.len(), self.first.len());
        assert_eq!(gradient.len(), self.first.len());
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = gradient[i];
            self.first[i] = self.beta1 * self.first[i] + (1.0 - self.beta1) * g;
            self.second[i] = self.beta2 * self.second[i] + (1.0 - self.beta2) * g * g;
            let m = self.first[i] / c1;
            let v = self.second[i] / c2;
            params[i] -= self.learning_rate * m / (v.sqrt() + self.epsilon);
        }
    }
}
