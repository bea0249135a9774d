use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Multipliers that scale the bandwidth game: link capacities (`m_b`),
/// congestion cost (`m_c`), noise mean (`m_xi`) and noise width (`d_xi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingParams {
    pub id: usize,
    pub m_b: f64,
    pub m_c: f64,
    pub m_xi: f64,
    pub d_xi: f64,
}

impl SettingParams {
    pub fn new(id: usize, m_b: f64, m_c: f64, m_xi: f64, d_xi: f64) -> Result<Self> {
        let s = Self {
            id,
            m_b,
            m_c,
            m_xi,
            d_xi,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.m_b, self.m_c, self.m_xi, self.d_xi]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("setting {} has a non-positive multiplier", self.id)))
        }
    }

    /// Setting `id` (1-based) from [`settings_table`].
    pub fn by_id(id: usize) -> Result<Self> {
        settings_table()
            .into_iter()
            .find(|s| s.id == id)
            .ok_or_else(|| invalid(format!("no setting with id {id} (valid: 1-12)")))
    }
}

/// The twelve parameter settings, as `(m_b, m_c, m_xi, d_xi)`. Each group of
/// three varies one multiplier while holding the others fixed.
pub fn settings_table() -> Vec<SettingParams> {
    const TABLE: [(f64, f64, f64, f64); 12] = [
        (1.0, 1.0, 5.0, 2.0),
        (0.1, 1.0, 5.0, 2.0),
        (0.01, 1.0, 5.0, 2.0),
        (0.1, 2.0, 2.0, 1.0),
        (0.1, 1.0, 2.0, 1.0),
        (0.1, 0.5, 2.0, 1.0),
        (1.0, 1.0, 1.0, 5.0),
        (1.0, 1.0, 2.0, 5.0),
        (1.0, 1.0, 5.0, 5.0),
        (1.0, 0.01, 1.0, 1.0),
        (1.0, 0.01, 1.0, 2.0),
        (1.0, 0.01, 1.0, 5.0),
    ];
    TABLE
        .iter()
        .enumerate()
        .map(|(i, &(m_b, m_c, m_xi, d_xi))| SettingParams {
            id: i + 1,
            m_b,
            m_c,
            m_xi,
            d_xi,
        })
        .collect()
}
