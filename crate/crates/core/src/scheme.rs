//! Relaying schemes behind one trait, looked up by name.
//!
//! A scheme turns the per-relay channel energies of one trial into a
//! destination SNR and knows which analytical envelope applies to it. The
//! Monte Carlo engine and the CLI only talk to `dyn Scheme`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::analysis::{genie_outage_bounds, selection_outage_bounds, BoundSet};
use crate::channel::Partition;
use crate::combining::RelayGains;
use crate::error::{Error, Result};

pub trait Scheme: Send + Sync {
    /// Registry key, also used in CSV output.
    fn name(&self) -> &'static str;

    /// Destination SNR for one trial. `threshold` is the relay decoding
    /// threshold `2^(2R) - 1`; schemes that assume every relay decodes
    /// ignore it.
    fn destination_snr(&self, gains: &RelayGains, eta: f64, threshold: f64) -> f64;

    /// High-SNR outage envelope this scheme should sit inside.
    fn bounds(&self, p: &Partition, rate: f64, eta: f64) -> Result<BoundSet>;
}

impl fmt::Debug for dyn Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The built-in schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    /// Beamforming, every relay assumed to decode.
    GenieTb,
    /// Space-time coding, every relay assumed to decode.
    GenieStc,
    /// Beamforming from the relays that decode.
    SelTb,
    /// Space-time coding over the relays that decode.
    SelStc,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [
        SchemeId::GenieTb,
        SchemeId::GenieStc,
        SchemeId::SelTb,
        SchemeId::SelStc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::GenieTb => "genie-tb",
            SchemeId::GenieStc => "genie-stc",
            SchemeId::SelTb => "sel-tb",
            SchemeId::SelStc => "sel-stc",
        }
    }

    pub fn scheme(self) -> Arc<dyn Scheme> {
        match self {
            SchemeId::GenieTb => Arc::new(GenieBeamforming),
            SchemeId::GenieStc => Arc::new(GenieSpaceTime),
            SchemeId::SelTb => Arc::new(SelectionBeamforming),
            SchemeId::SelStc => Arc::new(SelectionSpaceTime),
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GenieBeamforming;

impl Scheme for GenieBeamforming {
    fn name(&self) -> &'static str {
        SchemeId::GenieTb.as_str()
    }

    fn destination_snr(&self, gains: &RelayGains, eta: f64, _threshold: f64) -> f64 {
        gains.genie_tb(eta)
    }

    fn bounds(&self, p: &Partition, rate: f64, eta: f64) -> Result<BoundSet> {
        genie_outage_bounds(p.antennas(), rate, eta)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GenieSpaceTime;

impl Scheme for GenieSpaceTime {
    fn name(&self) -> &'static str {
        SchemeId::GenieStc.as_str()
    }

    fn destination_snr(&self, gains: &RelayGains, eta: f64, _threshold: f64) -> f64 {
        gains.genie_stc(eta)
    }

    fn bounds(&self, p: &Partition, rate: f64, eta: f64) -> Result<BoundSet> {
        genie_outage_bounds(p.antennas(), rate, eta)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SelectionBeamforming;

impl Scheme for SelectionBeamforming {
    fn name(&self) -> &'static str {
        SchemeId::SelTb.as_str()
    }

    fn destination_snr(&self, gains: &RelayGains, eta: f64, threshold: f64) -> f64 {
        gains.selection_tb(eta, threshold)
    }

    fn bounds(&self, p: &Partition, rate: f64, eta: f64) -> Result<BoundSet> {
        selection_outage_bounds(p, rate, eta)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SelectionSpaceTime;

impl Scheme for SelectionSpaceTime {
    fn name(&self) -> &'static str {
        SchemeId::SelStc.as_str()
    }

    fn destination_snr(&self, gains: &RelayGains, eta: f64, threshold: f64) -> f64 {
        gains.selection_stc(eta, threshold)
    }

    fn bounds(&self, p: &Partition, rate: f64, eta: f64) -> Result<BoundSet> {
        selection_outage_bounds(p, rate, eta)
    }
}

/// Name-keyed collection of schemes.
#[derive(Clone, Default)]
pub struct SchemeRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Scheme>>,
}

impl SchemeRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding the four built-in schemes.
    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        for id in SchemeId::ALL {
            registry
                .register(id.scheme())
                .expect("built-in scheme names are distinct");
        }
        registry
    }

    pub fn register(&mut self, scheme: Arc<dyn Scheme>) -> Result<()> {
        let name = scheme.name();
        if self.entries.contains_key(name) {
            return Err(Error::DuplicateScheme(name.to_string()));
        }
        self.entries.insert(name, scheme);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Scheme>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownScheme(name.to_string()))
    }

    /// Registered names in sorted order.
    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    /// Resolves a comma-separated list such as `"genie-tb,sel-tb"`.
    /// Duplicates are dropped, first occurrence wins.
    pub fn resolve_list(&self, list: &str) -> Result<Vec<Arc<dyn Scheme>>> {
        let mut out: Vec<Arc<dyn Scheme>> = Vec::new();
        for name in list.split(',').map(str::trim) {
            let scheme = self.get(name)?;
            if !out.iter().any(|s| s.name() == scheme.name()) {
                out.push(scheme);
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for SchemeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::BoundFamily;
    use crate::channel::ChannelRealization;
    use crate::combining::{decode_threshold, snr_report};

    #[test]
    fn ids_round_trip_through_names() {
        for id in SchemeId::ALL {
            assert_eq!(id.as_str().parse::<SchemeId>().unwrap(), id);
            assert_eq!(id.scheme().name(), id.as_str());
        }
        assert_eq!(
            "mrc".parse::<SchemeId>(),
            Err(Error::UnknownScheme("mrc".into()))
        );
    }

    #[test]
    fn builtin_registry_lookup() {
        let reg = SchemeRegistry::builtin();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(names, ["genie-stc", "genie-tb", "sel-stc", "sel-tb"]);
        assert_eq!(reg.get("sel-tb").unwrap().name(), "sel-tb");
        assert!(reg.get("nope").is_err());
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut reg = SchemeRegistry::builtin();
        assert_eq!(
            reg.register(Arc::new(GenieBeamforming)),
            Err(Error::DuplicateScheme("genie-tb".into()))
        );
    }

    #[test]
    fn resolve_list_keeps_order_and_dedups() {
        let reg = SchemeRegistry::builtin();
        let got: Vec<_> = reg
            .resolve_list("sel-tb, genie-tb,sel-tb")
            .unwrap()
            .iter()
            .map(|s| s.name())
            .collect();
        assert_eq!(got, ["sel-tb", "genie-tb"]);
        assert!(reg.resolve_list("sel-tb,,genie-tb").is_err());
    }

    #[test]
    fn custom_scheme_can_be_registered() {
        struct FirstRelayOnly;
        impl Scheme for FirstRelayOnly {
            fn name(&self) -> &'static str {
                "first-relay"
            }
            fn destination_snr(&self, gains: &RelayGains, eta: f64, _: f64) -> f64 {
                let r = gains.relays()[0];
                eta * r.forward
            }
            fn bounds(&self, p: &Partition, rate: f64, eta: f64) -> Result<BoundSet> {
                genie_outage_bounds(p.sizes()[0], rate, eta)
            }
        }
        let mut reg = SchemeRegistry::builtin();
        reg.register(Arc::new(FirstRelayOnly)).unwrap();
        assert_eq!(reg.get("first-relay").unwrap().name(), "first-relay");
    }

    #[test]
    fn schemes_match_direct_formulas() {
        let real = ChannelRealization::for_trial(3, 14, 4).unwrap();
        let p: Partition = "2,1,1".parse().unwrap();
        let gains = RelayGains::new(&real, &p).unwrap();
        let (eta, rate) = (2.5, 0.7);
        let report = snr_report(&real, &p, eta, rate).unwrap();
        let th = decode_threshold(rate);
        let snr = |id: SchemeId| id.scheme().destination_snr(&gains, eta, th);
        assert_eq!(snr(SchemeId::GenieTb), report.genie_tb);
        assert_eq!(snr(SchemeId::GenieStc), report.genie_stc);
        assert_eq!(snr(SchemeId::SelTb), report.selection_tb);
        assert_eq!(snr(SchemeId::SelStc), report.selection_stc);
    }

    #[test]
    fn bound_family_follows_premise() {
        let p: Partition = "2,2".parse().unwrap();
        for id in SchemeId::ALL {
            let fam = id.scheme().bounds(&p, 1.0, 100.0).unwrap().family;
            let want = match id {
                SchemeId::GenieTb | SchemeId::GenieStc => BoundFamily::AllDecode,
                _ => BoundFamily::Selection,
            };
            assert_eq!(fam, want);
        }
    }
}
