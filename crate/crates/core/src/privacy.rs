//! Anonymization and generalization applied before anything reaches a
//! ledger: party codes, concept and region truncation, time coarsening, and
//! the split of private transactions into detailed and generic parts.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::model::{
    ConceptCode, DetailLevel, Granularity, PartyCode, PartyKind, PrimaryBlock, RegionCode, Timestamp, TrackingNumber,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrivacyError {
    #[error("unknown party `{0}`")]
    UnknownParty(String),
    #[error("party `{0}` registered twice")]
    DuplicateParty(String),
    #[error("code `{0}` is used by more than one category or party")]
    CodeClash(String),
    #[error("detail split does not apply when the government is involved")]
    GovernmentInvolved,
}

/// Which private parties are partially covered on the secondary ledger.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskRule {
    /// A private payee of a government payer (public servant wages).
    #[default]
    PayeeOfGovernment,
    /// Any private party whose counterpart is the government.
    AnyPrivateWithGovernment,
    Never,
}

/// How primary blocks are reduced when derived into the secondary ledger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisclosurePolicy {
    pub salt_bits: u32,
    pub reference_hex_len: usize,
    pub mask_rule: MaskRule,
    pub concept_levels_up: usize,
    pub region_levels_up: usize,
    pub date_granularity: Granularity,
}

impl Default for DisclosurePolicy {
    fn default() -> Self {
        Self {
            salt_bits: 64,
            reference_hex_len: 17,
            mask_rule: MaskRule::PayeeOfGovernment,
            concept_levels_up: 1,
            region_levels_up: 1,
            date_granularity: Granularity::Day,
        }
    }
}

/// Rules applied to primary blocks themselves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacyPolicy {
    /// Split private transactions into a detailed and a generic part.
    pub detail_split: bool,
    pub primary_granularity: Granularity,
    pub primary_region_levels_up: usize,
}

impl Default for PrivacyPolicy {
    fn default() -> Self {
        Self { detail_split: true, primary_granularity: Granularity::Minute, primary_region_levels_up: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LedgerSide {
    Primary,
    Secondary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Payer,
    Payee,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartyContext {
    pub side: LedgerSide,
    pub role: Role,
    pub counterpart: PartyKind,
}

/// Code shown for `code` given its role and counterpart.
pub fn disclose_party(code: &PartyCode, role: Role, counterpart: PartyKind, side: LedgerSide, rule: MaskRule) -> PartyCode {
    if side == LedgerSide::Primary || code.kind != PartyKind::PrivateShared || counterpart != PartyKind::Government {
        return code.clone();
    }
    match (rule, role) {
        (MaskRule::PayeeOfGovernment, Role::Payee) | (MaskRule::AnyPrivateWithGovernment, _) => code.masked(),
        _ => code.clone(),
    }
}

/// Truncates `code` to `level`; a code already at or above it is unchanged.
pub fn generalize_concept(code: &ConceptCode, level: usize) -> ConceptCode {
    code.at_level(level)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Coarsening {
    pub granularity: Granularity,
    pub region_levels_up: usize,
}

pub fn coarsen(t: Timestamp, region: &RegionCode, settings: Coarsening) -> (Timestamp, RegionCode) {
    (t.coarsen(settings.granularity), region.up(settings.region_levels_up))
}

/// Concept a primary block shows on the secondary ledger.
///
/// Government-to-government blocks keep their detailed concept. Generic
/// parts of a split already carry the generalized code.
pub fn disclosed_concept(block: &PrimaryBlock, policy: &DisclosurePolicy) -> ConceptCode {
    if block.is_government_to_government() || block.detail == DetailLevel::Generic {
        block.detailed_concept.clone()
    } else {
        block.detailed_concept.up(policy.concept_levels_up)
    }
}

/// (day, region, concept) under which a primary block is disclosed. Both
/// sides of a reconciliation are keyed through this function.
pub fn disclosed_key(block: &PrimaryBlock, policy: &DisclosurePolicy) -> (Timestamp, RegionCode, ConceptCode) {
    let (date, region) = coarsen(
        block.timestamp,
        &block.region,
        Coarsening { granularity: policy.date_granularity, region_levels_up: policy.region_levels_up },
    );
    (date, region, disclosed_concept(block, policy))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetailSplit {
    pub detailed: Vec<TrackingNumber>,
    pub generic: Vec<TrackingNumber>,
    pub fraction: f64,
}

/// Draws p in [0, 0.5] once and gives the first ⌊p·n⌋ cents the detailed
/// concept; the rest carry only the generalized one.
pub fn detail_split<R: Rng>(
    mut cents: Vec<TrackingNumber>,
    rng: &mut R,
    government_involved: bool,
) -> Result<DetailSplit, PrivacyError> {
    if government_involved {
        return Err(PrivacyError::GovernmentInvolved);
    }
    let fraction: f64 = rng.random_range(0.0..=0.5);
    let k = ((fraction * cents.len() as f64).floor() as usize).min(cents.len() / 2);
    let generic = cents.split_off(k);
    Ok(DetailSplit { detailed: cents, generic, fraction })
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Registered {
    code: PartyCode,
    category: String,
}

/// Real party ids → ledger codes.
#[derive(Clone, Debug, Default)]
pub struct AnonymizationDirectory {
    parties: BTreeMap<String, Registered>,
}

impl AnonymizationDirectory {
    pub fn builder() -> DirectoryBuilder {
        DirectoryBuilder::default()
    }

    pub fn code(&self, id: &str) -> Result<&PartyCode, PrivacyError> {
        self.parties.get(id).map(|r| &r.code).ok_or_else(|| PrivacyError::UnknownParty(id.to_string()))
    }

    pub fn category(&self, id: &str) -> Option<&str> {
        self.parties.get(id).map(|r| r.category.as_str())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.parties.contains_key(id)
    }

    pub fn anonymize_party(&self, id: &str, ctx: PartyContext, rule: MaskRule) -> Result<PartyCode, PrivacyError> {
        Ok(disclose_party(self.code(id)?, ctx.role, ctx.counterpart, ctx.side, rule))
    }

    /// Real ids that share `code`.
    pub fn holders_of(&self, code: &str) -> Vec<&str> {
        self.parties.iter().filter(|(_, r)| r.code.code == code).map(|(id, _)| id.as_str()).collect()
    }

    pub fn parties(&self) -> impl Iterator<Item = (&str, &PartyCode)> {
        self.parties.iter().map(|(id, r)| (id.as_str(), &r.code))
    }
}

#[derive(Clone, Debug, Default)]
pub struct DirectoryBuilder {
    fixed: Vec<(String, String, PartyCode)>,
    private: Vec<(String, String)>,
    pools: BTreeMap<String, Vec<String>>,
    pool_sizes: BTreeMap<String, usize>,
}

/// Parties per generated shared code when a category has no explicit pool.
pub const DEFAULT_PARTIES_PER_CODE: usize = 10;

impl DirectoryBuilder {
    pub fn government(mut self, id: &str, code: &str, entry: Option<&str>) -> Self {
        self.fixed.push((id.into(), "government".into(), PartyCode::government(code, entry.map(str::to_string))));
        self
    }

    pub fn institution(mut self, id: &str, code: &str) -> Self {
        self.fixed.push((id.into(), "institution".into(), PartyCode::institution(code)));
        self
    }

    pub fn private(mut self, id: &str, category: &str) -> Self {
        self.private.push((id.into(), category.into()));
        self
    }

    /// Fixes the shared codes used for `category`.
    pub fn pool(mut self, category: &str, codes: &[&str]) -> Self {
        self.pools.insert(category.into(), codes.iter().map(|c| c.to_string()).collect());
        self
    }

    /// Number of generated shared codes for `category`.
    pub fn pool_size(mut self, category: &str, size: usize) -> Self {
        self.pool_sizes.insert(category.into(), size.max(1));
        self
    }

    pub fn build(self) -> Result<AnonymizationDirectory, PrivacyError> {
        let mut parties = BTreeMap::new();
        let mut used_codes: BTreeMap<String, String> = BTreeMap::new();
        for (id, category, code) in self.fixed {
            if used_codes.insert(code.code.clone(), id.clone()).is_some() {
                return Err(PrivacyError::CodeClash(code.code));
            }
            if parties.insert(id.clone(), Registered { code, category }).is_some() {
                return Err(PrivacyError::DuplicateParty(id));
            }
        }
        let mut by_category: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (id, category) in self.private {
            if parties.contains_key(&id) || !seen.insert(id.clone()) {
                return Err(PrivacyError::DuplicateParty(id));
            }
            by_category.entry(category).or_default().push(id);
        }
        for (category, mut ids) in by_category {
            let pool = match self.pools.get(&category) {
                Some(codes) if !codes.is_empty() => codes.clone(),
                _ => {
                    let size = self
                        .pool_sizes
                        .get(&category)
                        .copied()
                        .unwrap_or_else(|| ids.len().div_ceil(DEFAULT_PARTIES_PER_CODE).max(1));
                    generate_codes(&category, size, &used_codes)
                }
            };
            for code in &pool {
                if let Some(owner) = used_codes.insert(code.clone(), category.clone()) {
                    if owner != category {
                        return Err(PrivacyError::CodeClash(code.clone()));
                    }
                }
            }
            // Rank by a hash of the id, then hand out codes in pairs so
            // every code in use covers at least two parties.
            ids.sort_by_cached_key(|id| rank_key(&category, id));
            let m = ids.len();
            for (r, id) in ids.into_iter().enumerate() {
                let pair = if m >= 2 { (r / 2).min(m / 2 - 1) } else { 0 };
                let code = PartyCode::shared(pool[pair % pool.len()].clone());
                parties.insert(id, Registered { code, category: category.clone() });
            }
        }
        Ok(AnonymizationDirectory { parties })
    }
}

fn rank_key(category: &str, id: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(category.as_bytes());
    h.update([0]);
    h.update(id.as_bytes());
    h.finalize().into()
}

fn generate_codes(category: &str, size: usize, used: &BTreeMap<String, String>) -> Vec<String> {
    let mut out = Vec::with_capacity(size);
    let mut counter = 0u64;
    while out.len() < size {
        let digest = rank_key(category, &counter.to_string());
        let code = hex::encode_upper(&digest[..3])[..5].to_string();
        counter += 1;
        if !used.contains_key(&code) && !out.contains(&code) {
            out.push(code);
        }
    }
    out
}

pub const TAXONOMY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error("taxonomy schema v{0} is not supported (expected v{TAXONOMY_SCHEMA_VERSION})")]
    Version(u32),
    #[error("bad code in taxonomy: {0}")]
    Code(#[from] crate::model::CodeError),
}

/// Human-readable names for concept, region, and shared party codes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Taxonomy {
    pub schema_version: u32,
    #[serde(default)]
    pub concepts: BTreeMap<String, String>,
    #[serde(default)]
    pub regions: BTreeMap<String, String>,
    #[serde(default)]
    pub parties: BTreeMap<String, String>,
}

impl Taxonomy {
    pub fn parse(text: &str) -> Result<Self, TaxonomyError> {
        let t: Taxonomy = toml::from_str(text)?;
        if t.schema_version != TAXONOMY_SCHEMA_VERSION {
            return Err(TaxonomyError::Version(t.schema_version));
        }
        for c in t.concepts.keys() {
            ConceptCode::new(c.clone())?;
        }
        for r in t.regions.keys() {
            RegionCode::new(r.clone())?;
        }
        Ok(t)
    }

    pub fn builtin() -> Self {
        Self::parse(include_str!("../../../scenarios/taxonomy.toml")).expect("built-in taxonomy parses")
    }

    pub fn concept(&self, code: &str) -> Option<&str> {
        self.concepts.get(code).map(String::as_str)
    }

    pub fn region(&self, code: &str) -> Option<&str> {
        self.regions.get(code).map(String::as_str)
    }

    pub fn party(&self, code: &str) -> Option<&str> {
        self.parties.get(code).map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(s: &str) -> ConceptCode {
        s.parse().unwrap()
    }

    #[test]
    fn concept_generalization_examples() {
        assert_eq!(generalize_concept(&c("s236"), 2).as_str(), "s23");
        assert_eq!(generalize_concept(&c("r522"), 2).as_str(), "r52");
        assert_eq!(generalize_concept(&c("t16"), 1).as_str(), "t1");
        assert_eq!(generalize_concept(&c("s23"), 2).as_str(), "s23");
    }

    #[test]
    fn coarsening_examples() {
        let settings = Coarsening { granularity: Granularity::Day, region_levels_up: 1 };
        let (t, r) = coarsen(Timestamp::ymd_hm(2024, 3, 29, 14, 47), &"rA12".parse().unwrap(), settings);
        assert_eq!(t.to_string(), "2024/03/29");
        assert_eq!(r.as_str(), "rA1");
        let day = Timestamp::day(2024, 3, 29);
        assert_eq!(day.coarsen(Granularity::Day), day);
        let r: RegionCode = "rA12".parse().unwrap();
        assert_eq!(r.at_level(2).as_str(), "rA1");
    }

    fn directory() -> AnonymizationDirectory {
        AnonymizationDirectory::builder()
            .government("alcala-hr", "GOV- B4E5", Some("Madrid/ Alcalá de Henares city Hall/ Accounting Services/ Human Resources"))
            .private("servant-1", "public-servant")
            .private("servant-2", "public-servant")
            .pool("public-servant", &["2C3B4"])
            .private("person-1", "individual")
            .private("person-2", "individual")
            .pool("individual", &["AAAA1"])
            .build()
            .unwrap()
    }

    #[test]
    fn anonymization_examples() {
        let d = directory();
        let gov = d.code("alcala-hr").unwrap();
        assert_eq!(gov.code, "GOV- B4E5");
        let sec = |id, role, counterpart| {
            let ctx = PartyContext { side: LedgerSide::Secondary, role, counterpart };
            d.anonymize_party(id, ctx, MaskRule::PayeeOfGovernment).unwrap().code
        };
        assert_eq!(sec("alcala-hr", Role::Payer, PartyKind::PrivateShared), "GOV- B4E5");
        assert_eq!(sec("servant-1", Role::Payee, PartyKind::Government), "2C***");
        assert_eq!(sec("person-1", Role::Payee, PartyKind::PrivateShared), "AAAA1");
        // tax payer paying the government stays unmasked under the default rule
        assert_eq!(sec("person-1", Role::Payer, PartyKind::Government), "AAAA1");
        let primary = PartyContext { side: LedgerSide::Primary, role: Role::Payee, counterpart: PartyKind::Government };
        assert_eq!(d.anonymize_party("servant-1", primary, MaskRule::PayeeOfGovernment).unwrap().code, "2C3B4");
        assert_eq!(
            d.anonymize_party("ghost", primary, MaskRule::Never),
            Err(PrivacyError::UnknownParty("ghost".into()))
        );
        let any = PartyContext { side: LedgerSide::Secondary, role: Role::Payer, counterpart: PartyKind::Government };
        assert_eq!(d.anonymize_party("person-1", any, MaskRule::AnyPrivateWithGovernment).unwrap().code, "AA***");
    }

    #[test]
    fn detail_split_rejects_government() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(detail_split(vec![TrackingNumber::new(1)], &mut rng, true), Err(PrivacyError::GovernmentInvolved));
        let s = detail_split(Vec::new(), &mut rng, false).unwrap();
        assert!(s.detailed.is_empty() && s.generic.is_empty());
    }

    #[test]
    fn detail_split_partition_over_seeds() {
        let cents: Vec<TrackingNumber> = (0..2500).map(TrackingNumber::new).collect();
        for seed in 0..1000 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = detail_split(cents.clone(), &mut rng, false).unwrap();
            assert!((0.0..=0.5).contains(&s.fraction));
            assert_eq!(s.detailed.len(), (s.fraction * 2500.0).floor() as usize);
            assert!(s.detailed.len() <= 1250);
            let mut joined = s.detailed.clone();
            joined.extend(&s.generic);
            assert_eq!(joined, cents);
        }
    }

    proptest! {
        #[test]
        fn shared_codes_cover_two_parties(n in 2usize..60, pool in 1usize..12) {
            let mut b = AnonymizationDirectory::builder().pool_size("shop", pool);
            for i in 0..n {
                b = b.private(&format!("shop-{i}"), "shop");
            }
            let d = b.build().unwrap();
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for (_, code) in d.parties() {
                *counts.entry(code.code.clone()).or_default() += 1;
            }
            prop_assert!(counts.values().all(|&k| k >= 2));
            prop_assert_eq!(counts.values().sum::<usize>(), n);
        }

        #[test]
        fn generalization_composes(code in "[a-z][0-9A-Z]{1,6}", l1 in 1usize..8, l2 in 1usize..8) {
            let c = ConceptCode::new(code).unwrap();
            let (lo, hi) = (l1.min(l2), l1.max(l2));
            prop_assert_eq!(generalize_concept(&generalize_concept(&c, hi), lo), generalize_concept(&c, lo));
        }
    }

    #[test]
    fn assignment_is_stable() {
        let a = directory();
        let b = directory();
        assert_eq!(a.code("person-2").unwrap(), b.code("person-2").unwrap());
        assert_eq!(a.holders_of("2C3B4"), vec!["servant-1", "servant-2"]);
    }

    #[test]
    fn taxonomy_loads() {
        let t = Taxonomy::builtin();
        assert_eq!(t.concept("s236"), Some("Keeping accounting books"));
        assert_eq!(t.region("rA12"), Some("Madrid East"));
        assert!(matches!(Taxonomy::parse("schema_version = 2"), Err(TaxonomyError::Version(2))));
    }
}
