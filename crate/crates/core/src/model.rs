//! Combined pandemic/economy compartment model.
//!
//! Seven population compartments (susceptible, exposed, infected, each with
//! a quarantined twin, plus recovered) evolve under a closed system of rate
//! equations. A separate GDP index is driven by the quarantined and infected
//! compartments; nothing in the pandemic system reads it back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Population fractions plus the relative GDP index at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompartmentState {
    pub s: f64,
    pub s_q: f64,
    pub e: f64,
    pub e_q: f64,
    pub i: f64,
    pub i_q: f64,
    pub r: f64,
    pub gdp: f64,
}

impl CompartmentState {
    /// Population entirely susceptible, no economic deviation.
    pub const fn fully_susceptible() -> Self {
        Self {
            s: 1.0,
            s_q: 0.0,
            e: 0.0,
            e_q: 0.0,
            i: 0.0,
            i_q: 0.0,
            r: 0.0,
            gdp: 0.0,
        }
    }

    pub fn pandemic(&self) -> PandemicState {
        PandemicState([self.s, self.s_q, self.e, self.e_q, self.i, self.i_q, self.r])
    }

    pub fn from_parts(p: PandemicState, gdp: f64) -> Self {
        let [s, s_q, e, e_q, i, i_q, r] = p.0;
        Self {
            s,
            s_q,
            e,
            e_q,
            i,
            i_q,
            r,
            gdp,
        }
    }

    /// Exposed plus infected, quarantined or not. The health objective
    /// takes the maximum of this over time.
    pub fn active_cases(&self) -> f64 {
        self.e + self.e_q + self.i + self.i_q
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in COMPARTMENT_NAMES.iter().zip(self.pandemic().0) {
            if !v.is_finite() || v < 0.0 || v > 1.0 {
                return Err(Error::invalid(format!("initial {name}"), format!("{v} is outside [0, 1]")));
            }
        }
        if !self.gdp.is_finite() {
            return Err(Error::invalid("initial gdp", "must be finite"));
        }
        Ok(())
    }
}

pub const COMPARTMENT_NAMES: [&str; 7] = ["S", "Sq", "E", "Eq", "I", "Iq", "R"];

/// The seven pandemic compartments in the order S, Sq, E, Eq, I, Iq, R.
///
/// Kept apart from [`CompartmentState`] so that the pandemic right-hand side
/// cannot observe the GDP field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PandemicState(pub [f64; 7]);

impl PandemicState {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Rates and probabilities of the pandemic part of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PandemicParams {
    /// Contacts per person per time unit.
    pub c_r: f64,
    /// Transmission probability per contact.
    pub t_p: f64,
    /// Contact detection probability.
    pub c_dp: f64,
    /// Preventive quarantine rate.
    pub p_qr: f64,
    /// Preventive quarantine end rate.
    pub p_qer: f64,
    /// Immunity loss rate.
    pub i_lr: f64,
    /// Incubation rate.
    pub i_r: f64,
    /// Diagnosis rate.
    pub d_r: f64,
    /// Infected recovery rate.
    pub i_rr: f64,
    /// Infected quarantined recovery rate.
    pub i_qrr: f64,
}

impl Default for PandemicParams {
    fn default() -> Self {
        Self {
            c_r: 10.0,
            t_p: 0.1,
            c_dp: 0.05,
            p_qr: 0.0,
            p_qer: 1.0 / 14.0,
            i_lr: 1.0 / 90.0,
            i_r: 1.0 / 7.0,
            d_r: 1.0 / 14.0,
            i_rr: 1.0 / 14.0,
            i_qrr: 1.0 / 14.0,
        }
    }
}

/// Identifies one field of [`PandemicParams`]; used as a policy target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    CR,
    TP,
    CDp,
    PQr,
    PQer,
    ILr,
    IR,
    DR,
    IRr,
    IQrr,
}

impl ParamId {
    pub const ALL: [ParamId; 10] = [
        ParamId::CR,
        ParamId::TP,
        ParamId::CDp,
        ParamId::PQr,
        ParamId::PQer,
        ParamId::ILr,
        ParamId::IR,
        ParamId::DR,
        ParamId::IRr,
        ParamId::IQrr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::CR => "c_r",
            ParamId::TP => "t_p",
            ParamId::CDp => "c_dp",
            ParamId::PQr => "p_qr",
            ParamId::PQer => "p_qer",
            ParamId::ILr => "i_lr",
            ParamId::IR => "i_r",
            ParamId::DR => "d_r",
            ParamId::IRr => "i_rr",
            ParamId::IQrr => "i_qrr",
        }
    }

    /// Probabilities live in [0, 1]; everything else is a nonnegative rate.
    pub fn is_probability(self) -> bool {
        matches!(self, ParamId::TP | ParamId::CDp)
    }
}

impl std::str::FromStr for ParamId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownTarget(s.to_string()))
    }
}

impl std::fmt::Display for ParamId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl PandemicParams {
    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::CR => self.c_r,
            ParamId::TP => self.t_p,
            ParamId::CDp => self.c_dp,
            ParamId::PQr => self.p_qr,
            ParamId::PQer => self.p_qer,
            ParamId::ILr => self.i_lr,
            ParamId::IR => self.i_r,
            ParamId::DR => self.d_r,
            ParamId::IRr => self.i_rr,
            ParamId::IQrr => self.i_qrr,
        }
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut f64 {
        match id {
            ParamId::CR => &mut self.c_r,
            ParamId::TP => &mut self.t_p,
            ParamId::CDp => &mut self.c_dp,
            ParamId::PQr => &mut self.p_qr,
            ParamId::PQer => &mut self.p_qer,
            ParamId::ILr => &mut self.i_lr,
            ParamId::IR => &mut self.i_r,
            ParamId::DR => &mut self.d_r,
            ParamId::IRr => &mut self.i_rr,
            ParamId::IQrr => &mut self.i_qrr,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for id in ParamId::ALL {
            let v = self.get(id);
            if !v.is_finite() {
                return Err(Error::invalid(id.name(), "must be finite"));
            }
            if id.is_probability() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(id.name(), format!("{v} is outside [0, 1]")));
                }
            } else if v < 0.0 {
                return Err(Error::invalid(id.name(), format!("{v} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Parameters of the GDP equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconomyParams {
    /// Baseline GDP growth per time unit.
    pub b_g: f64,
    /// Overall pandemic influence scale.
    pub p_i: f64,
    /// Susceptible-quarantined impact.
    pub s_qi: f64,
    /// Exposed-quarantined impact.
    pub e_qi: f64,
    /// Infected impact.
    pub i_i: f64,
    /// Infected-quarantined impact.
    pub i_qi: f64,
}

impl Default for EconomyParams {
    fn default() -> Self {
        Self {
            b_g: 0.02,
            p_i: 0.12,
            s_qi: 0.4,
            e_qi: 0.4,
            i_i: 0.6,
            i_qi: 0.8,
        }
    }
}

impl EconomyParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("b_g", self.b_g),
            ("p_i", self.p_i),
            ("s_qi", self.s_qi),
            ("e_qi", self.e_qi),
            ("i_i", self.i_i),
            ("i_qi", self.i_qi),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
            if name != "b_g" && v < 0.0 {
                return Err(Error::invalid(name, format!("{v} must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub pandemic: PandemicParams,
    pub economy: EconomyParams,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.pandemic.validate()?;
        self.economy.validate()
    }
}

/// Right-hand side of the seven pandemic equations, in compartment order.
pub fn pandemic_derivatives(state: &PandemicState, p: &PandemicParams) -> [f64; 7] {
    let [s, s_q, e, e_q, i, i_q, r] = state.0;
    let contact = p.c_r * i * s;
    // Contact detected, no transmission.
    let to_s_q = contact * (1.0 - p.t_p) * p.c_dp;
    // Transmission, undetected.
    let to_e = contact * p.t_p * (1.0 - p.c_dp);
    // Transmission, detected.
    let to_e_q = contact * p.t_p * p.c_dp;

    let ds = -to_s_q - to_e - to_e_q - p.p_qr * s + p.p_qer * s_q + p.i_lr * r;
    let ds_q = to_s_q + p.p_qr * s - p.p_qer * s_q;
    let de = to_e + p.p_qer * e_q - p.p_qr * e - p.i_r * e;
    let de_q = to_e_q + p.p_qr * e - p.p_qer * e_q - p.i_r * e_q;
    let di = p.i_r * e - p.d_r * i - p.i_rr * i;
    let di_q = p.i_r * e_q + p.d_r * i - p.i_qrr * i_q;
    let dr = p.i_rr * i + p.i_qrr * i_q - p.i_lr * r;
    [ds, ds_q, de, de_q, di, di_q, dr]
}

/// Weighted economic load of the quarantined and infected compartments.
pub fn economy_load(state: &CompartmentState, e: &EconomyParams) -> f64 {
    e.s_qi * state.s_q + e.e_qi * state.e_q + e.i_i * state.i + e.i_qi * state.i_q
}

pub fn gdp_derivative(state: &CompartmentState, e: &EconomyParams) -> f64 {
    e.b_g - e.p_i * economy_load(state, e)
}

pub fn total_population(state: &CompartmentState) -> f64 {
    state.pandemic().total()
}
