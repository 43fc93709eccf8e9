//! Full-step predictor-corrector leap-frog with optional acoustic sub-cycling.
//!
//! Each step predicts `phi + dt phi' + dt^2/2 phi''` and `phi' + dt/2 phi''`,
//! solves the diagonal-mass systems for the new accelerations with the
//! predicted values, and corrects `phi' = phi'_pred + dt/2 phi''_new`.

use thiserror::Error;

use crate::mesh::Physics;
use crate::operators::SemModel;
use crate::sources::ElasticLoad;

#[derive(Debug, Error)]
pub enum TimeError {
    #[error("invalid time configuration: {0}")]
    Config(String),
    #[error("time step {dt:e} exceeds {safety} x stable estimate {limit:e} ({physics:?})")]
    Cfl {
        dt: f64,
        limit: f64,
        safety: f64,
        physics: Physics,
    },
    #[error("non-finite value detected at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Acoustic substeps per global step.
    pub n_loc: usize,
    pub cfl_safety: f64,
    /// Steps between NaN checks; 0 disables them.
    pub nan_check_every: usize,
}

impl TimeConfig {
    pub fn new(dt: f64, n_steps: usize) -> Self {
        Self {
            dt,
            n_steps,
            n_loc: 1,
            cfl_safety: 0.5,
            nan_check_every: 100,
        }
    }

    pub fn with_n_loc(self, n_loc: usize) -> Self {
        Self { n_loc, ..self }
    }

    pub fn with_cfl_safety(self, cfl_safety: f64) -> Self {
        Self { cfl_safety, ..self }
    }

    /// Checks the field ranges and the stability estimate: the global step
    /// against the elastic part, the substep against the acoustic part.
    pub fn validate(&self, model: &SemModel) -> Result<(), TimeError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(TimeError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.n_loc == 0 {
            return Err(TimeError::Config("n_loc must be at least 1".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(TimeError::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        let checks = [
            (Physics::Elastic, self.dt),
            (Physics::Acoustic, self.dt / self.n_loc as f64),
        ];
        for (physics, dt) in checks {
            let limit = model.dt_max_of(physics);
            if dt > self.cfl_safety * limit {
                return Err(TimeError::Cfl {
                    dt,
                    limit,
                    safety: self.cfl_safety,
                    physics,
                });
            }
        }
        Ok(())
    }
}

/// Displacement/potential, rate and acceleration for both subdomains.
///
/// The coupled recursion staggers the two fields: the acoustic arrays
/// approximate the potential at `t - acoustic_lag` (half an acoustic
/// substep), the elastic arrays the displacement at `t`. Consumers that need
/// both at one instant use [`State::acoustic_at_t`].
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub step: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_dot: Vec<f64>,
    pub psi_ddot: Vec<f64>,
    pub acoustic_lag: f64,
}

impl State {
    pub fn zeros(model: &SemModel) -> Self {
        let (ne, na) = (model.n_elastic(), model.n_acoustic());
        Self {
            t: 0.0,
            step: 0,
            u: vec![0.0; ne],
            v: vec![0.0; ne],
            a: vec![0.0; ne],
            psi: vec![0.0; na],
            psi_dot: vec![0.0; na],
            psi_ddot: vec![0.0; na],
            acoustic_lag: 0.0,
        }
    }

    /// `(psi, psi')` advanced over the lag by a second-order Taylor step.
    pub fn acoustic_at_t(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.acoustic_lag;
        let psi = (0..self.psi.len())
            .map(|i| self.psi[i] + h * self.psi_dot[i] + 0.5 * h * h * self.psi_ddot[i])
            .collect();
        let psi_dot = (0..self.psi.len())
            .map(|i| self.psi_dot[i] + h * self.psi_ddot[i])
            .collect();
        (psi, psi_dot)
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.v, &self.a, &self.psi, &self.psi_dot, &self.psi_ddot]
            .iter()
            .all(|x| x.iter().all(|v| v.is_finite()))
    }
}

/// `phi_pred = phi + dt phi' + dt^2/2 phi''`, `phi'_pred = phi' + dt/2 phi''`.
pub fn predict(phi: &[f64], phi_dot: &[f64], phi_ddot: &[f64], dt: f64, pred: &mut [f64], pred_dot: &mut [f64]) {
    let half = 0.5 * dt;
    let half_sq = 0.5 * dt * dt;
    for i in 0..phi.len() {
        pred[i] = phi[i] + dt * phi_dot[i] + half_sq * phi_ddot[i];
        pred_dot[i] = phi_dot[i] + half * phi_ddot[i];
    }
}

/// `phi' = phi'_pred + dt/2 phi''_new`.
pub fn correct(pred_dot: &[f64], new_ddot: &[f64], dt: f64, phi_dot: &mut [f64]) {
    let half = 0.5 * dt;
    for i in 0..pred_dot.len() {
        phi_dot[i] = pred_dot[i] + half * new_ddot[i];
    }
}

/// Energy bookkeeping of the last step (see [`Integrator::energy`]).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepEnergy {
    /// Scheme-consistent energy, non-increasing for uncoupled dissipative runs.
    pub modified: f64,
}

/// Time integrator owning the state and the loads.
pub struct Integrator<'m> {
    pub model: &'m SemModel,
    pub config: TimeConfig,
    pub state: State,
    loads: Vec<Box<dyn ElasticLoad + 'm>>,
    trace_energy: bool,
    last_energy: Option<StepEnergy>,
    // work vectors
    u_pred: Vec<f64>,
    v_pred: Vec<f64>,
    psi_pred: Vec<f64>,
    psi_dot_pred: Vec<f64>,
    psi_tilde: Vec<f64>,
    psi_tilde_dot: Vec<f64>,
    u_dot_ac: Vec<f64>,
    rhs_e: Vec<f64>,
    rhs_a: Vec<f64>,
}

impl std::fmt::Debug for Integrator<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Integrator")
            .field("config", &self.config)
            .field("t", &self.state.t)
            .field("loads", &self.loads.len())
            .finish()
    }
}

impl<'m> Integrator<'m> {
    /// Validates `config` and starts from rest.
    pub fn new(model: &'m SemModel, config: TimeConfig) -> Result<Self, TimeError> {
        config.validate(model)?;
        let mut state = State::zeros(model);
        // acoustic substep k is driven by the elastic velocity at its midpoint
        state.acoustic_lag = 0.5 * config.dt / config.n_loc as f64;
        let (ne, na) = (model.n_elastic(), model.n_acoustic());
        Ok(Self {
            model,
            config,
            state,
            loads: Vec::new(),
            trace_energy: false,
            last_energy: None,
            u_pred: vec![0.0; ne],
            v_pred: vec![0.0; ne],
            psi_pred: vec![0.0; na],
            psi_dot_pred: vec![0.0; na],
            psi_tilde: vec![0.0; na],
            psi_tilde_dot: vec![0.0; na],
            u_dot_ac: vec![0.0; ne],
            rhs_e: vec![0.0; ne],
            rhs_a: vec![0.0; na],
        })
    }

    pub fn add_load(&mut self, load: impl ElasticLoad + 'm) {
        self.loads.push(Box::new(load));
    }

    pub fn add_boxed_load(&mut self, load: Box<dyn ElasticLoad + 'm>) {
        self.loads.push(load);
    }

    /// Records the scheme-consistent energy after every step.
    pub fn set_energy_trace(&mut self, on: bool) {
        self.trace_energy = on;
    }

    pub fn last_step_energy(&self) -> Option<StepEnergy> {
        self.last_energy
    }

    /// Sets initial displacement/velocity fields (all at the current `t`)
    /// and computes consistent initial accelerations. The acoustic data is
    /// moved back over the stagger lag, see [`State`].
    pub fn initialize(&mut self, u: Vec<f64>, v: Vec<f64>, psi: Vec<f64>, psi_dot: Vec<f64>) -> Result<(), TimeError> {
        let m = self.model;
        if u.len() != m.n_elastic()
            || v.len() != m.n_elastic()
            || psi.len() != m.n_acoustic()
            || psi_dot.len() != m.n_acoustic()
        {
            return Err(TimeError::Config("initial field lengths do not match the model".into()));
        }
        self.state.u = u;
        self.state.v = v;
        self.state.psi = psi;
        self.state.psi_dot = psi_dot;
        self.refresh_accelerations();
        let h = self.state.acoustic_lag;
        if h > 0.0 && m.n_acoustic() > 0 {
            let s = &mut self.state;
            for i in 0..s.psi.len() {
                s.psi[i] += -h * s.psi_dot[i] + 0.5 * h * h * s.psi_ddot[i];
                s.psi_dot[i] -= h * s.psi_ddot[i];
            }
            self.refresh_accelerations();
        }
        if !self.state.is_finite() {
            return Err(TimeError::NonFinite {
                step: 0,
                t: self.state.t,
            });
        }
        Ok(())
    }

    /// Recomputes `a`, `psi_ddot` from the current displacements and rates.
    pub fn refresh_accelerations(&mut self) {
        let m = self.model;
        let s = &mut self.state;
        // acoustic first: the elastic load needs psi_tilde_dot
        for i in 0..s.psi.len() {
            self.psi_tilde[i] = s.psi[i] + m.acoustic_damp[i] * s.psi_dot[i];
        }
        self.rhs_a.iter_mut().for_each(|x| *x = 0.0);
        m.acoustic_rhs(&self.psi_tilde, &s.psi_dot, &s.v, &mut self.rhs_a);
        for i in 0..s.psi.len() {
            s.psi_ddot[i] = self.rhs_a[i] / m.mass.a2[i];
        }
        for i in 0..s.psi.len() {
            self.psi_tilde_dot[i] = s.psi_dot[i] + m.acoustic_damp[i] * s.psi_ddot[i];
        }
        self.rhs_e.iter_mut().for_each(|x| *x = 0.0);
        m.elastic_rhs(&s.u, &s.v, &self.psi_tilde_dot, &mut self.rhs_e);
        for load in &self.loads {
            load.add_load(s.t, &mut self.rhs_e);
        }
        divide_elastic(&self.rhs_e, &m.mass.e2, &mut s.a);
    }

    fn acoustic_solve(&mut self) {
        let m = self.model;
        for i in 0..self.psi_pred.len() {
            self.psi_tilde[i] = self.psi_pred[i] + m.acoustic_damp[i] * self.psi_dot_pred[i];
        }
        self.rhs_a.iter_mut().for_each(|x| *x = 0.0);
        m.acoustic_rhs(&self.psi_tilde, &self.psi_dot_pred, &self.u_dot_ac, &mut self.rhs_a);
        for i in 0..self.rhs_a.len() {
            self.state.psi_ddot[i] = self.rhs_a[i] / m.mass.a2[i];
        }
    }

    fn elastic_solve(&mut self, t_new: f64) {
        let m = self.model;
        self.rhs_e.iter_mut().for_each(|x| *x = 0.0);
        m.elastic_rhs(&self.u_pred, &self.v_pred, &self.psi_tilde_dot, &mut self.rhs_e);
        for load in &self.loads {
            load.add_load(t_new, &mut self.rhs_e);
        }
        divide_elastic(&self.rhs_e, &m.mass.e2, &mut self.state.a);
    }

    /// Plain coupled step: predict both fields, solve and correct the
    /// acoustic part with the predicted elastic velocity, then solve the
    /// elastic part with the acoustic rate advanced to the next half step
    /// (`psi'_pred + dt psi''_new`), and correct.
    ///
    /// Feeding the elastic solve the leading acoustic rate makes the explicit
    /// coupling symplectic; using the lagged predicted rate on both sides
    /// amplifies the coupled mode by `1 + O(dt^2)` every step.
    pub fn step_plain(&mut self) {
        let m = self.model;
        let dt = self.config.dt;
        let t_new = self.state.t + dt;
        let u_old = self.trace_energy.then(|| self.state.u.clone());
        {
            let s = &self.state;
            predict(&s.u, &s.v, &s.a, dt, &mut self.u_pred, &mut self.v_pred);
            predict(
                &s.psi,
                &s.psi_dot,
                &s.psi_ddot,
                dt,
                &mut self.psi_pred,
                &mut self.psi_dot_pred,
            );
        }
        self.u_dot_ac.copy_from_slice(&self.v_pred);
        self.acoustic_solve();
        {
            let s = &mut self.state;
            for i in 0..self.psi_pred.len() {
                self.psi_tilde_dot[i] = self.psi_dot_pred[i] + dt * s.psi_ddot[i] + m.acoustic_damp[i] * s.psi_ddot[i];
            }
            correct(&self.psi_dot_pred, &s.psi_ddot, dt, &mut s.psi_dot);
            s.psi.copy_from_slice(&self.psi_pred);
        }
        self.elastic_solve(t_new);
        let s = &mut self.state;
        correct(&self.v_pred, &s.a, dt, &mut s.v);
        s.u.copy_from_slice(&self.u_pred);
        s.t = t_new;
        s.step += 1;
        if let Some(u_old) = u_old {
            self.last_energy = Some(self.modified_energy(&u_old));
        }
    }

    /// Sub-cycled step: elastic predict, `n_loc` acoustic substeps of size
    /// `dt / n_loc`, all driven by the predicted elastic velocity, then the
    /// elastic solve with the leading acoustic rate of the last substep, then
    /// the elastic correct. With `n_loc = 1` this is bitwise identical to
    /// [`Self::step_plain`].
    ///
    /// In staggered terms the predicted velocity is the elastic half-step
    /// value and, with the acoustic lag of half a substep, the last leading
    /// rate sits at `t + dt`. Holding the velocity over the window keeps the
    /// exchange antisymmetric, as in the plain step; extrapolating it with
    /// the acceleration, or averaging the rates over the window, makes the
    /// coupled recursion unstable well below the single-rate step limit.
    pub fn step_lts(&mut self) {
        let m = self.model;
        let dt = self.config.dt;
        let n_loc = self.config.n_loc;
        let dtl = dt / n_loc as f64;
        let t_new = self.state.t + dt;
        let u_old = self.trace_energy.then(|| self.state.u.clone());
        {
            let s = &self.state;
            predict(&s.u, &s.v, &s.a, dt, &mut self.u_pred, &mut self.v_pred);
        }
        // the window holds one elastic half-step velocity; every substep sees it
        self.u_dot_ac.copy_from_slice(&self.v_pred);
        for k in 0..n_loc {
            {
                let s = &self.state;
                predict(
                    &s.psi,
                    &s.psi_dot,
                    &s.psi_ddot,
                    dtl,
                    &mut self.psi_pred,
                    &mut self.psi_dot_pred,
                );
            }
            self.acoustic_solve();
            let s = &mut self.state;
            if k + 1 == n_loc {
                for i in 0..self.psi_pred.len() {
                    self.psi_tilde_dot[i] =
                        self.psi_dot_pred[i] + dtl * s.psi_ddot[i] + m.acoustic_damp[i] * s.psi_ddot[i];
                }
            }
            correct(&self.psi_dot_pred, &s.psi_ddot, dtl, &mut s.psi_dot);
            s.psi.copy_from_slice(&self.psi_pred);
        }
        self.elastic_solve(t_new);
        let s = &mut self.state;
        correct(&self.v_pred, &s.a, dt, &mut s.v);
        s.u.copy_from_slice(&self.u_pred);
        s.t = t_new;
        s.step += 1;
        if let Some(u_old) = u_old {
            self.last_energy = Some(self.modified_energy(&u_old));
        }
    }

    /// One global step (`step_lts` when sub-cycling, `step_plain` otherwise),
    /// followed by the periodic finiteness check.
    pub fn step(&mut self) -> Result<(), TimeError> {
        if self.config.n_loc > 1 {
            self.step_lts();
        } else {
            self.step_plain();
        }
        let every = self.config.nan_check_every;
        if every > 0 && self.state.step % every == 0 && !self.state.is_finite() {
            return Err(TimeError::NonFinite {
                step: self.state.step,
                t: self.state.t,
            });
        }
        Ok(())
    }

    /// Runs the configured number of steps, calling `observe` after each.
    pub fn run(&mut self, mut observe: impl FnMut(&Self)) -> Result<(), TimeError> {
        for _ in 0..self.config.n_steps {
            self.step()?;
            observe(self);
        }
        if !self.state.is_finite() {
            return Err(TimeError::NonFinite {
                step: self.state.step,
                t: self.state.t,
            });
        }
        Ok(())
    }

    /// Total mechanical energy of the current state, see [`energy`].
    pub fn energy(&self) -> f64 {
        energy(self.model, &self.state)
    }

    /// `1/2 w^T M w + 1/2 u_new^T K u_old - dt/4 w^T C w` with `w` the
    /// predicted (half-step) velocity and `C` the velocity damping (viscous
    /// and absorbing), plus the density-weighted acoustic analogue. For the
    /// uncoupled leap-frog recursion this quantity changes by
    /// `-dt/4 (w + w')^T C (w + w')` per step; the elasto-acoustic exchange
    /// adds the cross term `-dt/2 w^T L_e(psi'_pred)`, which makes the sum
    /// exact for the coupled recursion when `b = 0` and `n_loc = 1`.
    fn modified_energy(&self, u_old: &[f64]) -> StepEnergy {
        let m = self.model;
        let dt = self.config.dt;
        let s = &self.state;
        let w = &self.v_pred;
        let mut e = 0.0;
        for (g, &m2) in m.mass.e2.iter().enumerate() {
            for c in 0..3 {
                let x = w[3 * g + c];
                e += 0.5 * (m2 - 0.5 * dt * m.mass.e1[g]) * x * x;
            }
        }
        let mut cw = vec![0.0; w.len()];
        m.apply_abc_elastic(w, &mut cw);
        // apply_abc adds -C w
        e += 0.25 * dt * dot(w, &cw);
        e += 0.5 * m.elastic_bilinear(&s.u, u_old);

        if m.n_acoustic() > 0 {
            // with sub-cycling the acoustic part is evaluated on the last substep
            let dta = dt / self.config.n_loc as f64;
            let psi_old: Vec<f64> = s.psi.iter().zip(&self.psi_dot_pred).map(|(p, w)| p - dta * w).collect();
            let wa = &self.psi_dot_pred;
            for (i, &x) in wa.iter().enumerate() {
                e += 0.5 * m.acoustic_rho[i] * m.mass.a2[i] * x * x;
            }
            let mut ca = vec![0.0; wa.len()];
            m.apply_abc_acoustic(wa, &mut ca);
            let abc: f64 = wa
                .iter()
                .zip(&ca)
                .zip(&m.acoustic_rho)
                .map(|((a, b), r)| r * a * b)
                .sum();
            e += 0.25 * dta * abc;
            let damp: Vec<f64> = wa.iter().zip(&m.acoustic_damp).map(|(x, d)| x * d).collect();
            e -= 0.25 * dta * m.acoustic_bilinear(wa, &damp);
            e += 0.5 * m.acoustic_bilinear(&s.psi, &psi_old);
            // staggered coupling work, -dt/2 w^T L_e(psi'_pred)
            let mut le = vec![0.0; w.len()];
            m.apply_ea_elastic(wa, &mut le);
            e -= 0.5 * dta * dot(w, &le);
        }
        StepEnergy { modified: e }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn divide_elastic(rhs: &[f64], m2: &[f64], out: &mut [f64]) {
    for (g, &m) in m2.iter().enumerate() {
        for c in 0..3 {
            out[3 * g + c] = rhs[3 * g + c] / m;
        }
    }
}

/// `E = 1/2 v^T M v + 1/2 u^T (K - DG + M0) u + rho_a (1/2 psi'^T M_a psi' + 1/2 psi^T K_a psi)`.
pub fn energy(model: &SemModel, state: &State) -> f64 {
    let mut e = 0.0;
    for (g, &m2) in model.mass.e2.iter().enumerate() {
        for c in 0..3 {
            e += 0.5 * m2 * state.v[3 * g + c] * state.v[3 * g + c];
        }
    }
    e += 0.5 * model.elastic_potential(&state.u);
    if model.n_acoustic() > 0 {
        let (psi, psi_dot) = state.acoustic_at_t();
        for (i, &x) in psi_dot.iter().enumerate() {
            e += 0.5 * model.acoustic_rho[i] * model.mass.a2[i] * x * x;
        }
        let psi_tilde: Vec<f64> = psi
            .iter()
            .zip(&psi_dot)
            .zip(&model.acoustic_damp)
            .map(|((p, d), k)| p + k * d)
            .collect();
        e += 0.5 * model.acoustic_bilinear(&psi_tilde, &psi_tilde);
    }
    e
}
