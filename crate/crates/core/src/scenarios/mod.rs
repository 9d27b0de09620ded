//! Scenario variants of the allocation problem.
//!
//! * [`cdn`]: tree of caching servers, customers assigned to edge servers,
//!   upstream traffic estimated from miss probabilities.
//! * [`lvdn`]: live video; producers upload to exactly one server, servers
//!   replicate to viewers. Lowers to a generic [`Instance`](crate::Instance)
//!   with server-only billing.
//! * [`rtcn`]: real-time groups; expands to live video.
//! * [`cloudwan`]: integer client demands served by PoPs, with the
//!   total-unimodularity checker in [`tu`] and an exact rational simplex in
//!   [`simplex`] for LP relaxations.
//!
//! Scenario billing counts server egress only.

pub mod cdn;
pub mod cloudwan;
mod flow;
pub mod lvdn;
pub mod rtcn;
pub mod simplex;
pub mod tu;

pub use cdn::{CdnCustomer, CdnInstance, CdnSlot};
pub use cloudwan::{CloudWanInstance, CwanReport, CwanSlot};
pub use lvdn::{LvdnInstance, LvdnProducer, LvdnSlot};
pub use rtcn::{RtcnInstance, RtcnParticipant, RtcnSlot};
pub use tu::{check_totally_unimodular, check_tu_matrix, TuReport};

use serde::{Deserialize, Serialize};

/// Exact (exhaustive) or greedy scenario solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Exact,
    Greedy,
}

/// Reads any instance document, dispatching on its `schema` field.
pub fn parse_any(text: &str) -> crate::Result<crate::gen::Generated> {
    use crate::gen::Generated;
    #[derive(Deserialize)]
    struct Probe {
        schema: String,
    }
    let probe: Probe = serde_json::from_str(text)?;
    Ok(match probe.schema.as_str() {
        cdn::CDN_SCHEMA => Generated::Cdn(CdnInstance::from_json(text)?),
        lvdn::LVDN_SCHEMA => Generated::Lvdn(LvdnInstance::from_json(text)?),
        rtcn::RTCN_SCHEMA => Generated::Rtcn(RtcnInstance::from_json(text)?),
        cloudwan::CWAN_SCHEMA => Generated::Cwan(CloudWanInstance::from_json(text)?),
        _ => Generated::Generic(crate::io::instance_from_json(text)?),
    })
}
