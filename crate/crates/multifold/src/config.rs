use serde::{Deserialize, Serialize};

/// Step-size control for the chart integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Smallest admissible `|1 + κ a sin z / √(1-w)|`.
    pub denom_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_step: 0.25, min_step: 1e-10, denom_floor: 1e-8 }
    }
}

/// Every tunable of the engine. Serializes as one flat key-value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    #[serde(flatten)]
    pub integrator: IntegratorConfig,
    /// Half-width of the band `|Im z| < r0`.
    pub r0: f64,
    /// Radius of the transversal disc `|w| ≤ r1`.
    pub r1: f64,
    /// Bound on `|a|`.
    pub r2: f64,
    /// `|w|` beyond which a lift is reported as leaving the chart.
    pub chart_exit_radius: f64,
    pub closure_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub newton_max_halvings: usize,
    /// A Newton limit closer than this to 0 is the trivial fixed point.
    pub trivial_tol: f64,
    pub separation_tol: f64,
    pub dedup_tol: f64,
    pub trace_samples_per_period: usize,
    pub contour_initial_samples: usize,
    pub contour_max_samples: usize,
    /// Smallest admissible `|P^m(u) - u|` on a counting contour.
    pub zero_floor: f64,
    pub vertical_margin: f64,
    pub eps_floor: f64,
    pub quad_tol: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            r0: 0.5,
            r1: 0.3,
            r2: 0.1,
            chart_exit_radius: 0.995,
            closure_tol: 1e-8,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            newton_max_halvings: 8,
            trivial_tol: 1e-9,
            separation_tol: 1e-6,
            dedup_tol: 1e-8,
            trace_samples_per_period: 64,
            contour_initial_samples: 64,
            contour_max_samples: 8192,
            zero_floor: 1e-11,
            vertical_margin: 1e-9,
            eps_floor: 1e-3,
            quad_tol: 1e-10,
        }
    }
}

impl EngineConfig {
    /// Names of the keys holding invalid values.
    pub fn invalid_keys(&self) -> Vec<&'static str> {
        let i = &self.integrator;
        let positive = [
            ("abs_tol", i.abs_tol),
            ("rel_tol", i.rel_tol),
            ("max_step", i.max_step),
            ("min_step", i.min_step),
            ("denom_floor", i.denom_floor),
            ("r0", self.r0),
            ("r1", self.r1),
            ("r2", self.r2),
            ("closure_tol", self.closure_tol),
            ("newton_tol", self.newton_tol),
            ("trivial_tol", self.trivial_tol),
            ("separation_tol", self.separation_tol),
            ("dedup_tol", self.dedup_tol),
            ("zero_floor", self.zero_floor),
            ("vertical_margin", self.vertical_margin),
            ("eps_floor", self.eps_floor),
            ("quad_tol", self.quad_tol),
        ];
        let mut bad: Vec<&'static str> =
            positive.iter().filter(|(_, v)| !(v.is_finite() && *v > 0.0)).map(|(k, _)| *k).collect();
        if i.min_step >= i.max_step {
            bad.push("min_step");
        }
        if self.r1 >= 1.0 {
            bad.push("r1");
        }
        if !(self.chart_exit_radius > self.r1 && self.chart_exit_radius < 1.0) {
            bad.push("chart_exit_radius");
        }
        if self.newton_max_iter == 0 {
            bad.push("newton_max_iter");
        }
        if self.trace_samples_per_period < 8 {
            bad.push("trace_samples_per_period");
        }
        if self.contour_initial_samples < 8 {
            bad.push("contour_initial_samples");
        }
        if self.contour_max_samples < self.contour_initial_samples {
            bad.push("contour_max_samples");
        }
        bad.sort_unstable();
        bad.dedup();
        bad
    }
}
