//! Area/power breakdown grouped by module tag.

use std::fmt;

use serde::Serialize;

use super::{CostError, CostModel, Dec4};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentRow {
    pub name: String,
    pub power_w: Dec4,
    pub area_mm2: Dec4,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModuleSummary {
    pub tag: String,
    pub label: String,
    pub components: Vec<ComponentRow>,
    /// Exact sums of the component values.
    pub power_w_exact: Dec4,
    pub area_mm2_exact: Dec4,
    /// Exact sums rounded to the configured number of decimals.
    pub power_w: Dec4,
    pub area_mm2: Dec4,
}

/// Module subtotals are rounded; the grand total is the sum of the rounded
/// subtotals so the table always adds up as printed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AreaPowerSummary {
    pub modules: Vec<ModuleSummary>,
    pub total_power_w: Dec4,
    pub total_area_mm2: Dec4,
    pub total_power_w_exact: Dec4,
    pub total_area_mm2_exact: Dec4,
}

pub fn area_power_summary(c: &CostModel) -> Result<AreaPowerSummary, CostError> {
    if c.components.is_empty() {
        return Err(CostError::NoComponents);
    }
    let mut modules: Vec<ModuleSummary> = Vec::new();
    for comp in &c.components {
        let idx = match modules.iter().position(|m| m.tag == comp.module) {
            Some(i) => i,
            None => {
                modules.push(ModuleSummary {
                    tag: comp.module.clone(),
                    label: c
                        .module_names
                        .get(&comp.module)
                        .cloned()
                        .unwrap_or_else(|| comp.module.clone()),
                    components: Vec::new(),
                    power_w_exact: Dec4(0),
                    area_mm2_exact: Dec4(0),
                    power_w: Dec4(0),
                    area_mm2: Dec4(0),
                });
                modules.len() - 1
            }
        };
        let m = &mut modules[idx];
        m.components.push(ComponentRow {
            name: comp.name.clone(),
            power_w: comp.power,
            area_mm2: comp.area,
        });
        m.power_w_exact = m.power_w_exact + comp.power;
        m.area_mm2_exact = m.area_mm2_exact + comp.area;
    }
    for m in &mut modules {
        m.power_w = m.power_w_exact.round_to(c.summary_decimals);
        m.area_mm2 = m.area_mm2_exact.round_to(c.summary_decimals);
    }
    Ok(AreaPowerSummary {
        total_power_w: modules.iter().map(|m| m.power_w).sum(),
        total_area_mm2: modules.iter().map(|m| m.area_mm2).sum(),
        total_power_w_exact: modules.iter().map(|m| m.power_w_exact).sum(),
        total_area_mm2_exact: modules.iter().map(|m| m.area_mm2_exact).sum(),
        modules,
    })
}

impl AreaPowerSummary {
    pub fn module(&self, tag: &str) -> Option<&ModuleSummary> {
        self.modules.iter().find(|m| m.tag == tag)
    }
}

impl fmt::Display for AreaPowerSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name_w = self
            .modules
            .iter()
            .flat_map(|m| {
                m.components
                    .iter()
                    .map(|c| c.name.len() + 2)
                    .chain([m.label.len() + 6])
            })
            .max()
            .unwrap_or(0)
            .max(9);
        writeln!(
            f,
            "{:<name_w$}  {:>10}  {:>10}",
            "component", "power W", "area mm2"
        )?;
        for m in &self.modules {
            for c in &m.components {
                writeln!(
                    f,
                    "  {:<w$}  {:>10}  {:>10}",
                    c.name,
                    c.power_w.to_string(),
                    c.area_mm2.to_string(),
                    w = name_w - 2
                )?;
            }
            let label = format!("{} total", m.label);
            writeln!(
                f,
                "{:<name_w$}  {:>10}  {:>10}",
                label,
                m.power_w.to_string(),
                m.area_mm2.to_string()
            )?;
        }
        write!(
            f,
            "{:<name_w$}  {:>10}  {:>10}",
            "total",
            self.total_power_w.to_string(),
            self.total_area_mm2.to_string()
        )
    }
}
