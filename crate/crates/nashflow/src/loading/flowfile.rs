use serde::{Deserialize, Serialize};

use super::FlowOverTime;
use crate::netmodel::Instance;
use crate::timefn::StepFunction;

/// On-disk flow: one entry per nonzero (commodity, arc) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowFile {
    pub entries: Vec<FlowEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowEntry {
    pub commodity: String,
    pub arc: String,
    pub inflow: StepFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outflow: Option<StepFunction>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FlowFileError {
    #[error("unknown commodity {0}")]
    UnknownCommodity(String),
    #[error("unknown arc {0}")]
    UnknownArc(String),
    #[error("commodity {commodity} on arc {arc} appears twice")]
    Duplicate { commodity: String, arc: String },
}

type Table = Vec<Vec<StepFunction>>;

impl FlowFile {
    pub fn from_flow(inst: &Instance, flow: &FlowOverTime) -> Self {
        let mut entries = Vec::new();
        for j in inst.commodity_ids() {
            for e in inst.arc_ids() {
                let (fin, fout) = (flow.inflow(j, e), flow.outflow(j, e));
                if fin.is_zero() && fout.is_zero() {
                    continue;
                }
                entries.push(FlowEntry {
                    commodity: inst.commodity(j).id.clone(),
                    arc: inst.arc(e).id.clone(),
                    inflow: fin.clone(),
                    outflow: Some(fout.clone()),
                });
            }
        }
        FlowFile { entries }
    }

    fn tables(&self, inst: &Instance) -> Result<(Table, Table), FlowFileError> {
        let blank = vec![vec![StepFunction::zero(); inst.arc_count()]; inst.commodity_count()];
        let (mut fin, mut fout) = (blank.clone(), blank);
        let mut seen = vec![vec![false; inst.arc_count()]; inst.commodity_count()];
        for entry in &self.entries {
            let j = inst
                .commodity_by_id(&entry.commodity)
                .ok_or_else(|| FlowFileError::UnknownCommodity(entry.commodity.clone()))?;
            let e = inst
                .arc_by_id(&entry.arc)
                .ok_or_else(|| FlowFileError::UnknownArc(entry.arc.clone()))?;
            if std::mem::replace(&mut seen[j.0][e.0], true) {
                return Err(FlowFileError::Duplicate {
                    commodity: entry.commodity.clone(),
                    arc: entry.arc.clone(),
                });
            }
            fin[j.0][e.0] = entry.inflow.clone();
            if let Some(o) = &entry.outflow {
                fout[j.0][e.0] = o.clone();
            }
        }
        Ok((fin, fout))
    }

    /// Inflow table indexed `[commodity][arc]`; outflows are ignored.
    pub fn inflows(&self, inst: &Instance) -> Result<Table, FlowFileError> {
        Ok(self.tables(inst)?.0)
    }

    /// Full flow; missing outflows are zero.
    pub fn to_flow(&self, inst: &Instance) -> Result<FlowOverTime, FlowFileError> {
        let (fin, fout) = self.tables(inst)?;
        Ok(FlowOverTime::new(fin, fout).expect("tables have instance shape"))
    }
}
