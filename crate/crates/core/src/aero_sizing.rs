//! Conceptual-design calculators: wing area from span and aspect ratio,
//! slender-wing normal-force slope, tail-area sizing, static margin and
//! control margin.
//!
//! Lengths are metres measured from the nose tip, areas square metres,
//! normal-force slopes per radian.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Geometric and inertial parameters of the airframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissileConfig {
    pub diameter: f64,
    pub length: f64,
    pub nose_length: f64,
    pub body_length: f64,
    pub boattail_length: f64,
    pub nozzle_exit_area: f64,
    /// Full tip-to-tip span. The published 444 mm is one panel.
    pub wingspan: f64,
    pub wing_area: f64,
    pub tail_area: f64,
    pub aspect_ratio: f64,
    pub mean_aero_chord: f64,
    pub x_cg: f64,
    pub x_ac: f64,
    pub x_mac: f64,
    pub mass: f64,
    pub inertia_z: f64,
    pub cruise_speed: f64,
    pub mach: f64,
    pub altitude: f64,
}

impl Default for MissileConfig {
    fn default() -> Self {
        Self {
            diameter: 0.200,
            length: 5.200,
            nose_length: 1.000,
            body_length: 4.000,
            boattail_length: 0.200,
            nozzle_exit_area: 0.015,
            wingspan: 0.888,
            wing_area: 0.282,
            tail_area: 0.0865,
            aspect_ratio: 2.75,
            mean_aero_chord: 0.377,
            x_cg: 2.500,
            x_ac: 3.150,
            x_mac: 2.750,
            mass: 85.0,
            inertia_z: 40.0,
            cruise_speed: 250.0,
            mach: 0.85,
            altitude: 6000.0,
        }
    }
}

impl MissileConfig {
    /// Body cross-section area, (π/4)·d².
    pub fn reference_area(&self) -> f64 {
        reference_area(self.diameter)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("diameter", self.diameter),
            ("length", self.length),
            ("nose_length", self.nose_length),
            ("body_length", self.body_length),
            ("boattail_length", self.boattail_length),
            ("nozzle_exit_area", self.nozzle_exit_area),
            ("wingspan", self.wingspan),
            ("wing_area", self.wing_area),
            ("tail_area", self.tail_area),
            ("aspect_ratio", self.aspect_ratio),
            ("mean_aero_chord", self.mean_aero_chord),
            ("x_cg", self.x_cg),
            ("x_ac", self.x_ac),
            ("x_mac", self.x_mac),
            ("mass", self.mass),
            ("inertia_z", self.inertia_z),
        ] {
            require_positive(name, v)?;
        }
        if self.nose_length + self.body_length > self.length {
            return Err(Error::config(format!(
                "nose_length + body_length ({}) exceeds missile length ({})",
                self.nose_length + self.body_length,
                self.length
            )));
        }
        Ok(())
    }
}

/// Aerodynamic derivatives at zero angle of attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeroDerivatives {
    pub cl0: f64,
    pub cd0: f64,
    /// Constant part of the lift-curve slope; the slope is `cl_alpha + cl_alpha_per_rad·α`.
    pub cl_alpha: f64,
    pub cl_alpha_per_rad: f64,
    pub cm_alpha: f64,
    /// Housed for completeness; no implemented force balance consumes it.
    pub cl_delta: f64,
    pub cm_delta: f64,
}

impl Default for AeroDerivatives {
    fn default() -> Self {
        Self {
            cl0: 0.924,
            cd0: 0.603,
            cl_alpha: 0.524,
            cl_alpha_per_rad: 2.0,
            cm_alpha: -0.300,
            cl_delta: 0.208,
            cm_delta: 0.267,
        }
    }
}

impl AeroDerivatives {
    pub fn lift_slope(&self, alpha: f64) -> f64 {
        self.cl_alpha + self.cl_alpha_per_rad * alpha
    }

    pub fn is_statically_stable(&self) -> bool {
        self.cm_alpha < 0.0
    }
}

/// Inputs to the tail-area sizing relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailSizingInputs {
    pub diameter: f64,
    pub wing_area: f64,
    pub reference_area: f64,
    pub x_cg: f64,
    pub x_cp_body: f64,
    pub x_cp_wing: f64,
    pub x_cp_tail: f64,
    pub x_ac: f64,
    pub cn_alpha_body: f64,
    pub cn_alpha_wing: f64,
    pub cn_alpha_tail: f64,
}

impl Default for TailSizingInputs {
    /// Tabulated sizing assumptions. The table carries no X_AC, so the
    /// configuration's 3150 mm aerodynamic centre is used.
    fn default() -> Self {
        let x_cg = 2.600;
        Self {
            diameter: 0.200,
            wing_area: 0.282,
            reference_area: 0.0314,
            x_cg,
            x_cp_body: 0.200,
            // X_CG − X_CP,wing = −250 mm
            x_cp_wing: x_cg + 0.250,
            x_cp_tail: 4.800,
            x_ac: 3.150,
            cn_alpha_body: 0.0,
            cn_alpha_wing: 0.262,
            cn_alpha_tail: 0.262,
        }
    }
}

impl TailSizingInputs {
    pub fn validate(&self) -> Result<()> {
        require_positive("diameter", self.diameter)?;
        require_positive("wing_area", self.wing_area)?;
        require_positive("reference_area", self.reference_area)?;
        if self.cn_alpha_tail == 0.0 {
            return Err(Error::SingularSizing {
                term: "tail normal-force slope",
            });
        }
        Ok(())
    }
}

/// Outcome of the tail sizing relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailSizing {
    /// S_T/S_ref, sign as computed.
    pub ratio: f64,
    /// |ratio|·S_ref.
    pub tail_area: f64,
}

pub fn reference_area(diameter: f64) -> f64 {
    PI / 4.0 * diameter * diameter
}

/// S_W = b²/AR.
pub fn wing_area_from_span(span: f64, aspect_ratio: f64) -> Result<f64> {
    let b = require_positive("span", span)?;
    let ar = require_positive("aspect_ratio", aspect_ratio)?;
    Ok(b * b / ar)
}

/// b = √(AR·S_W).
pub fn span_from_area(wing_area: f64, aspect_ratio: f64) -> Result<f64> {
    let s = require_positive("wing_area", wing_area)?;
    let ar = require_positive("aspect_ratio", aspect_ratio)?;
    Ok((ar * s).sqrt())
}

/// AR = b²/S_W.
pub fn aspect_ratio_from(span: f64, wing_area: f64) -> Result<f64> {
    let b = require_positive("span", span)?;
    let s = require_positive("wing_area", wing_area)?;
    Ok(b * b / s)
}

/// Slender-wing normal-force slope (π/2)·AR, per radian.
pub fn slender_wing_cn_alpha(aspect_ratio: f64) -> Result<f64> {
    let ar = require_positive("aspect_ratio", aspect_ratio)?;
    Ok(PI / 2.0 * ar)
}

/// Required tail-to-reference area ratio.
///
/// Evaluated term by term as the relation is printed: the body and wing
/// moment terms are added to the static-margin term, and only the latter is
/// divided by the tail-arm denominator. Every moment arm is normalised by the
/// diameter.
pub fn tail_area_ratio(inputs: &TailSizingInputs) -> Result<f64> {
    let d = require_positive("diameter", inputs.diameter)?;
    require_positive("wing_area", inputs.wing_area)?;
    let s_ref = require_positive("reference_area", inputs.reference_area)?;
    let area_ratio = inputs.wing_area / s_ref;

    let body_arm = (inputs.x_cg - inputs.x_cp_body) / d;
    let wing_arm = (inputs.x_cg - inputs.x_cp_wing) / d;
    let margin_arm = (inputs.x_ac - inputs.x_cg) / d;
    let tail_arm = (inputs.x_cp_tail - inputs.x_cg) / d;

    let lifting = inputs.cn_alpha_body + inputs.cn_alpha_wing * area_ratio;
    let tail_term = inputs.cn_alpha_tail * tail_arm;
    let denominator = tail_term - margin_arm;
    if denominator == 0.0 {
        let term = if tail_term == 0.0 {
            "tail moment term C_Nα,tail·(X_CP,tail − X_CG)/d and margin term (X_AC − X_CG)/d"
        } else {
            "denominator C_Nα,tail·(X_CP,tail − X_CG)/d − (X_AC − X_CG)/d"
        };
        return Err(Error::SingularSizing { term });
    }

    Ok(inputs.cn_alpha_body * body_arm
        + inputs.cn_alpha_wing * wing_arm * area_ratio
        + lifting * margin_arm / denominator)
}

/// Tail ratio together with the resulting area |ratio|·S_ref.
pub fn size_tail(inputs: &TailSizingInputs) -> Result<TailSizing> {
    let ratio = tail_area_ratio(inputs)?;
    Ok(TailSizing {
        ratio,
        tail_area: ratio.abs() * inputs.reference_area,
    })
}

/// (X_AC − X_CG)/l_M. Positive means the aerodynamic centre is aft of the
/// centre of gravity.
pub fn static_margin(x_ac: f64, x_cg: f64, length: f64) -> Result<f64> {
    let l = require_positive("length", length)?;
    Ok((x_ac - x_cg) / l)
}

/// (X_AC − X_CG)/d, the same margin in calibres.
pub fn static_margin_calibers(x_ac: f64, x_cg: f64, diameter: f64) -> Result<f64> {
    let d = require_positive("diameter", diameter)?;
    Ok((x_ac - x_cg) / d)
}

/// Signed comparison C_Mα < C_Mδ.
pub fn check_control_margin(cm_alpha: f64, cm_delta: f64) -> bool {
    cm_alpha < cm_delta
}

/// Everything the `size` command reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizingReport {
    pub wing_area: f64,
    pub tail: TailSizing,
    pub static_margin: f64,
    pub static_margin_calibers: f64,
    pub statically_stable: bool,
    pub control_margin_ok: bool,
}

pub fn sizing_report(
    missile: &MissileConfig,
    derivatives: &AeroDerivatives,
    tail: &TailSizingInputs,
) -> Result<SizingReport> {
    let wing_area = wing_area_from_span(missile.wingspan, missile.aspect_ratio)?;
    let tail = size_tail(tail)?;
    let margin = static_margin(missile.x_ac, missile.x_cg, missile.length)?;
    Ok(SizingReport {
        wing_area,
        tail,
        static_margin: margin,
        static_margin_calibers: static_margin_calibers(missile.x_ac, missile.x_cg, missile.diameter)?,
        statically_stable: margin > 0.0,
        control_margin_ok: check_control_margin(derivatives.cm_alpha, derivatives.cm_delta),
    })
}

impl SizingReport {
    pub fn render(&self) -> String {
        let verdict = |ok: bool| if ok { "pass" } else { "fail" };
        format!(
            "wing area (b²/AR)        {:.4} m²\n\
             tail area ratio S_T/S_ref {:.3}\n\
             tail area               {:.4} m²\n\
             static margin           {:.1} % of length ({:.3} calibres, {})\n\
             control margin          {}\n",
            self.wing_area,
            self.tail.ratio,
            self.tail.tail_area,
            100.0 * self.static_margin,
            self.static_margin_calibers,
            if self.statically_stable { "stable" } else { "unstable" },
            verdict(self.control_margin_ok),
        )
    }
}
