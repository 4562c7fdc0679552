//! The synthetic knowledge base the offline fixtures serve: six topic
//! collections with deterministic membership, property values, relational
//! edges and page intros. Everything is a pure function of the member
//! index, so two builds of the world are identical byte for byte.
//!
//! Page intros carry light wiki markup (bold runs, one template, one ref,
//! one link) so the live markup-stripping path is exercised, and every
//! property is stated in a uniform "Its {property} is {value}." sentence.
//! A small, hash-chosen fraction of those sentences is omitted to model
//! pages that do not state a fact; the omission rule is deterministic.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::bench::TopicConfig;
use crate::graph::{Edge, EntityRef, RelationRef, WikiGraph};
use crate::table::ColumnKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopicKey {
    AcmFellows,
    Cities,
    Presidents,
    Elements,
    Olympics,
    NobelChemistry,
}

impl TopicKey {
    pub const ALL: [TopicKey; 6] = [
        TopicKey::AcmFellows,
        TopicKey::Cities,
        TopicKey::Presidents,
        TopicKey::Elements,
        TopicKey::Olympics,
        TopicKey::NobelChemistry,
    ];
}

#[derive(Debug, Clone, Copy)]
pub struct PropSpec {
    pub name: &'static str,
    pub kind: ColumnKind,
}

/// A topic's relational edge scheme: members point at a target entity via
/// `pid`. When the target is itself a member, `member_column` names the
/// table column that carries the target's name (the relationship SQL can
/// then check the link from the table alone).
#[derive(Debug, Clone, Copy)]
pub struct RelationSpec {
    pub pid: &'static str,
    pub label: &'static str,
    pub member_column: Option<&'static str>,
}

#[derive(Debug, Clone, Copy)]
pub struct TopicSpec {
    pub key: TopicKey,
    pub name: &'static str,
    pub table_name: &'static str,
    pub noun: &'static str,
    pub noun_plural: &'static str,
    pub count: usize,
    pub root_id: &'static str,
    pub membership_pid: &'static str,
    pub membership_label: &'static str,
    pub properties: &'static [PropSpec],
    pub relation: Option<RelationSpec>,
}

const ACM_PROPS: &[PropSpec] = &[
    PropSpec { name: "nationality", kind: ColumnKind::Text },
    PropSpec { name: "field of study", kind: ColumnKind::Text },
    PropSpec { name: "affiliation", kind: ColumnKind::Text },
];

const CITY_PROPS: &[PropSpec] = &[
    PropSpec { name: "population", kind: ColumnKind::Integer },
    PropSpec { name: "geographic coordinates", kind: ColumnKind::Text },
    PropSpec { name: "altitude", kind: ColumnKind::Decimal },
    PropSpec { name: "GDP", kind: ColumnKind::Decimal },
];

const PRESIDENT_PROPS: &[PropSpec] = &[
    PropSpec { name: "term lengths", kind: ColumnKind::Integer },
    PropSpec { name: "political parties", kind: ColumnKind::Text },
    PropSpec { name: "vice presidents", kind: ColumnKind::Text },
    PropSpec { name: "birth states", kind: ColumnKind::Text },
    PropSpec { name: "previous occupations", kind: ColumnKind::Text },
];

const ELEMENT_PROPS: &[PropSpec] = &[
    PropSpec { name: "atomic number", kind: ColumnKind::Integer },
    PropSpec { name: "atomic mass", kind: ColumnKind::Decimal },
    PropSpec { name: "boiling point", kind: ColumnKind::Decimal },
    PropSpec { name: "melting point", kind: ColumnKind::Decimal },
    PropSpec { name: "electron configuration", kind: ColumnKind::Text },
];

const OLYMPIC_PROPS: &[PropSpec] = &[
    PropSpec { name: "host cities", kind: ColumnKind::Text },
    PropSpec { name: "number of participating countries", kind: ColumnKind::Integer },
    PropSpec { name: "total number of events", kind: ColumnKind::Integer },
    PropSpec { name: "medal tally", kind: ColumnKind::Integer },
    PropSpec { name: "records broken", kind: ColumnKind::Integer },
];

const NOBEL_PROPS: &[PropSpec] = &[
    PropSpec { name: "categories", kind: ColumnKind::Text },
    PropSpec { name: "year of award", kind: ColumnKind::Integer },
    PropSpec { name: "country of origin", kind: ColumnKind::Text },
    PropSpec { name: "field of contribution", kind: ColumnKind::Text },
];

const TOPICS: [TopicSpec; 6] = [
    TopicSpec {
        key: TopicKey::AcmFellows,
        name: "ACM fellows",
        table_name: "acm_fellows",
        noun: "ACM fellow",
        noun_plural: "ACM fellows",
        count: 1115,
        root_id: "Q101",
        membership_pid: "P101",
        membership_label: "ACM fellows membership",
        properties: ACM_PROPS,
        relation: Some(RelationSpec {
            pid: "P213",
            label: "affiliated institution",
            member_column: None,
        }),
    },
    TopicSpec {
        key: TopicKey::Cities,
        name: "Cities of the World",
        table_name: "cities",
        noun: "city",
        noun_plural: "cities",
        count: 7040,
        root_id: "Q102",
        membership_pid: "P102",
        membership_label: "cities membership",
        properties: CITY_PROPS,
        relation: Some(RelationSpec { pid: "P212", label: "country", member_column: None }),
    },
    TopicSpec {
        key: TopicKey::Presidents,
        name: "Presidents of the United States",
        table_name: "presidents",
        noun: "president",
        noun_plural: "presidents",
        count: 55,
        root_id: "Q103",
        membership_pid: "P103",
        membership_label: "presidents membership",
        properties: PRESIDENT_PROPS,
        relation: Some(RelationSpec {
            pid: "P211",
            label: "vice president",
            member_column: Some("vice presidents"),
        }),
    },
    TopicSpec {
        key: TopicKey::Elements,
        name: "Chemical elements",
        table_name: "chemical_elements",
        noun: "chemical element",
        noun_plural: "chemical elements",
        count: 166,
        root_id: "Q104",
        membership_pid: "P104",
        membership_label: "chemical elements membership",
        properties: ELEMENT_PROPS,
        relation: None,
    },
    TopicSpec {
        key: TopicKey::Olympics,
        name: "Summer Olympic Games",
        table_name: "summer_olympics",
        noun: "Summer Olympics edition",
        noun_plural: "Summer Olympics editions",
        count: 35,
        root_id: "Q105",
        membership_pid: "P105",
        membership_label: "Summer Olympics editions membership",
        properties: OLYMPIC_PROPS,
        relation: Some(RelationSpec { pid: "P214", label: "host city", member_column: None }),
    },
    TopicSpec {
        key: TopicKey::NobelChemistry,
        name: "Nobel laureates in Chemistry",
        table_name: "nobel_chemistry",
        noun: "Nobel Chemistry laureate",
        noun_plural: "Nobel Chemistry laureates",
        count: 194,
        root_id: "Q106",
        membership_pid: "P106",
        membership_label: "Nobel Chemistry laureates membership",
        properties: NOBEL_PROPS,
        relation: Some(RelationSpec {
            pid: "P215",
            label: "country of origin",
            member_column: None,
        }),
    },
];

pub fn topic_specs() -> &'static [TopicSpec; 6] {
    &TOPICS
}

pub fn topic_spec(key: TopicKey) -> &'static TopicSpec {
    TOPICS.iter().find(|s| s.key == key).expect("every key has a spec")
}

pub fn spec_by_name(name: &str) -> Option<&'static TopicSpec> {
    TOPICS.iter().find(|s| s.name.eq_ignore_ascii_case(name.trim()))
}

pub fn spec_by_table(table_name: &str) -> Option<&'static TopicSpec> {
    TOPICS.iter().find(|s| s.table_name.eq_ignore_ascii_case(table_name.trim()))
}

pub fn spec_by_plural(plural: &str) -> Option<&'static TopicSpec> {
    TOPICS.iter().find(|s| s.noun_plural.eq_ignore_ascii_case(plural.trim()))
}

pub fn spec_by_noun(noun: &str) -> Option<&'static TopicSpec> {
    TOPICS.iter().find(|s| s.noun.eq_ignore_ascii_case(noun.trim()))
}

// --- name pools -----------------------------------------------------------
//
// Pools are sized so (i % a, i / a) stays injective over the topic count;
// member labels double as page titles, so a test asserts global uniqueness.

const ACM_FIRST: [&str; 40] = [
    "Alden", "Briar", "Cassian", "Doran", "Elowen", "Fintan", "Greer", "Hollis", "Idris",
    "Jocasta", "Keir", "Lenore", "Maren", "Nolwen", "Orrin", "Petra", "Quill", "Rowan", "Sable",
    "Tamsin", "Ulric", "Vesper", "Wren", "Xanthe", "Yorick", "Zinnia", "Ansel", "Bronwyn",
    "Corin", "Delphine", "Emrys", "Faye", "Galen", "Haldis", "Isolde", "Jarek", "Kerensa",
    "Lorcan", "Mireille", "Niall",
];

const ACM_LAST: [&str; 28] = [
    "Abernathy", "Blackwood", "Carmody", "Delacroix", "Eastgate", "Fairburn", "Goswick",
    "Hathaway", "Ironside", "Jessamine", "Kentwell", "Lockridge", "Marchbank", "Nethercott",
    "Oakden", "Pemberton", "Quickfall", "Ravenhill", "Silverton", "Thackeray", "Underhay",
    "Veltman", "Whitford", "Yellowley", "Zouche", "Ashworth", "Birtwistle", "Crowther",
];

const NOBEL_LAST: [&str; 5] =
    ["Falkenrath", "Greymantle", "Hollowbrook", "Ingleford", "Jorvikson"];

const PRESIDENT_FIRST: [&str; 11] = [
    "Edmund", "Theodore", "Quentin", "Abner", "Lucius", "Martin", "Chester", "Rutherford",
    "Silas", "Warren", "Howard",
];

const PRESIDENT_LAST: [&str; 5] =
    ["Ashcombe", "Bellweather", "Crowninshield", "Danforth", "Everhart"];

const CITY_PRE: [&str; 20] = [
    "Ald", "Bren", "Cor", "Dal", "Elm", "Fen", "Gil", "Hale", "Ist", "Jor", "Kel", "Lor", "Mar",
    "Nor", "Ost", "Pel", "Quar", "Ros", "Sel", "Tor",
];

const CITY_MID: [&str; 16] = [
    "a", "e", "i", "o", "u", "an", "en", "in", "on", "un", "ar", "er", "ir", "or", "ur", "al",
];

const CITY_SUF: [&str; 22] = [
    "beck", "borough", "burg", "by", "cairn", "dale", "field", "ford", "gate", "ham", "haven",
    "holm", "hurst", "land", "mere", "mont", "moor", "port", "stead", "strand", "vale", "wick",
];

const ELEMENT_STEM: [&str; 42] = [
    "Aether", "Boral", "Cindel", "Dross", "Ebor", "Fulgar", "Glacen", "Hedron", "Ivor", "Jaspen",
    "Kryon", "Lumen", "Morvan", "Nekris", "Obron", "Phael", "Quorin", "Rhodan", "Sarnel",
    "Talvor", "Umbric", "Vetran", "Wyvern", "Xanthor", "Ystrel", "Zephran", "Arkose", "Bellane",
    "Corvane", "Durnel", "Eskel", "Fennor", "Gryle", "Hollan", "Imbrel", "Jorund", "Kelvan",
    "Lorvan", "Mirex", "Norvel", "Ostrel", "Pyrran",
];

const ELEMENT_SUF: [&str; 4] = ["ium", "ite", "ogen", "ine"];

const INSTITUTION_STEM: [&str; 30] = [
    "Arlen", "Bexford", "Calder", "Dunholm", "Eastvale", "Farrow", "Glenarm", "Hartwell",
    "Ingram", "Jessup", "Kirkwall", "Lanford", "Marlow", "Newbridge", "Ostwick", "Pembrook",
    "Quillan", "Redmane", "Stanmore", "Tellbrook", "Umberly", "Vance", "Westrel", "Yarrow",
    "Zellig", "Ashgrove", "Birchall", "Coleridge", "Dorran", "Elsworth",
];

const PARTIES: [&str; 6] = [
    "Unity Party", "Federal League", "Reform Front", "National Concord", "Liberty Union",
    "Progress Alliance",
];

const STATES: [&str; 15] = [
    "Avonshire", "Brackenford", "Caldermoor", "Dunvale", "Eastmarch", "Fennwick", "Glenrose",
    "Harrowgate", "Ironvale", "Jasperfield", "Kestrel Plains", "Larkspur", "Merrowstone",
    "Northam", "Oakhurst",
];

const OCCUPATIONS: [&str; 8] = [
    "lawyer", "general", "governor", "senator", "diplomat", "professor", "merchant", "engineer",
];

const FIELDS: [&str; 12] = [
    "distributed systems", "databases", "machine learning", "computer graphics",
    "programming languages", "operating systems", "information retrieval",
    "computational theory", "human-computer interaction", "computer networks",
    "software engineering", "cryptography",
];

const CONTRIBUTIONS: [&str; 10] = [
    "catalysis", "polymer synthesis", "spectroscopy", "electrochemistry", "thermodynamics",
    "crystallography", "photochemistry", "radiochemistry", "surface chemistry",
    "molecular modeling",
];

const CATEGORIES: [&str; 5] = [
    "organic chemistry", "inorganic chemistry", "physical chemistry", "analytical chemistry",
    "biochemistry",
];

/// Canonical country name first, then the alias spellings the intros cycle
/// through. Every alias folds back to the canonical form through the default
/// synonym dictionary, which is what the normalization stage is for.
const COUNTRY_VARIANTS: [&[&str]; 20] = [
    &["United States", "US", "USA", "America", "American", "U.S."],
    &["United Kingdom", "UK", "Britain", "Great Britain", "British"],
    &["France", "French"],
    &["Germany", "German"],
    &["Italy", "Italian"],
    &["Spain", "Spanish"],
    &["Netherlands", "Holland", "Dutch"],
    &["Switzerland", "Swiss"],
    &["Japan", "Japanese"],
    &["China", "Chinese"],
    &["Russia", "Russian"],
    &["Canada", "Canadian"],
    &["Australia", "Australian"],
    &["India", "Indian"],
    &["Brazil", "Brazilian"],
    &["Mexico", "Mexican"],
    &["Sweden", "Swedish"],
    &["Norway", "Norwegian"],
    &["Denmark", "Danish"],
    &["Poland", "Polish"],
];

const COUNTRY_BASE: usize = 500;
const INSTITUTION_BASE: usize = 700;
pub const DECOY_ID: &str = "Q901";

fn member_base(key: TopicKey) -> usize {
    match key {
        TopicKey::AcmFellows => 10_000,
        TopicKey::Cities => 20_000,
        TopicKey::Presidents => 1_000,
        TopicKey::Elements => 2_000,
        TopicKey::Olympics => 3_000,
        TopicKey::NobelChemistry => 4_000,
    }
}

pub fn member_id(key: TopicKey, i: usize) -> String {
    format!("Q{}", member_base(key) + i)
}

pub fn member_label(key: TopicKey, i: usize) -> String {
    match key {
        TopicKey::AcmFellows => format!("{} {}", ACM_FIRST[i % 40], ACM_LAST[i / 40]),
        TopicKey::Cities => {
            format!("{}{}{}", CITY_PRE[i % 20], CITY_MID[(i / 20) % 16], CITY_SUF[i / 320])
        }
        TopicKey::Presidents => {
            format!("{} {}", PRESIDENT_FIRST[i % 11], PRESIDENT_LAST[i / 11])
        }
        TopicKey::Elements => format!("{}{}", ELEMENT_STEM[i % 42], ELEMENT_SUF[i / 42]),
        TopicKey::Olympics => format!("{} Summer Olympics", 1896 + 4 * i),
        TopicKey::NobelChemistry => format!("{} {}", ACM_FIRST[i % 40], NOBEL_LAST[i / 40]),
    }
}

fn country_id(c: usize) -> String {
    format!("Q{}", COUNTRY_BASE + c)
}

fn institution_id(j: usize) -> String {
    format!("Q{}", INSTITUTION_BASE + j)
}

fn institution_label(j: usize) -> String {
    let stem = INSTITUTION_STEM[j % 30];
    if j % 2 == 0 {
        format!("University of {stem}")
    } else {
        format!("{stem} Institute of Technology")
    }
}

fn format_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (pos, ch) in digits.chars().enumerate() {
        if pos > 0 && (digits.len() - pos) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn country_cell(country: usize, salt: usize) -> String {
    let variants = COUNTRY_VARIANTS[country % 20];
    variants[salt % variants.len()].to_string()
}

/// Country index a member maps to, for topics whose relational edge points
/// at a country.
pub fn country_index(key: TopicKey, i: usize) -> usize {
    match key {
        TopicKey::Cities => i % 20,
        TopicKey::NobelChemistry => (i * 11) % 20,
        TopicKey::AcmFellows => i % 20,
        _ => 0,
    }
}

/// Host-city member index for one Olympics edition; eighteen distinct hosts
/// over thirty-five editions, so some editions deliberately share a host.
pub fn olympics_host_index(i: usize) -> usize {
    (i % 18) * 391
}

pub fn president_term_years(i: usize) -> u64 {
    2 + 2 * ((i as u64 * 3) % 5)
}

/// The value string exactly as the member's page intro states it. Numbers
/// carry units or separators so the lenient coercion path does real work.
pub fn raw_property_value(key: TopicKey, property: &str, i: usize) -> String {
    match (key, property) {
        (TopicKey::AcmFellows, "nationality") => country_cell(country_index(key, i), i / 20),
        (TopicKey::AcmFellows, "field of study") => FIELDS[(i * 7) % 12].to_string(),
        (TopicKey::AcmFellows, "affiliation") => institution_label(i % 30),

        (TopicKey::Cities, "population") => {
            format_thousands(12_000 + (i as u64 * 7919) % 9_000_000)
        }
        (TopicKey::Cities, "geographic coordinates") => {
            let lat = ((i as i64 * 13) % 1800) - 900;
            let lon = ((i as i64 * 29) % 3600) - 1800;
            let ns = if lat < 0 { 'S' } else { 'N' };
            let ew = if lon < 0 { 'W' } else { 'E' };
            format!(
                "{:.1}°{ns}, {:.1}°{ew}",
                (lat.abs() as f64) / 10.0,
                (lon.abs() as f64) / 10.0
            )
        }
        (TopicKey::Cities, "altitude") => {
            format!("{:.1} m", ((i as u64 * 37) % 4200) as f64 / 10.0)
        }
        (TopicKey::Cities, "GDP") => {
            format!("${}.{} billion", 10 + (i as u64 * 101) % 900, i % 10)
        }

        (TopicKey::Presidents, "term lengths") => {
            format!("{} years", president_term_years(i))
        }
        (TopicKey::Presidents, "political parties") => PARTIES[(i * 5 + 1) % 6].to_string(),
        (TopicKey::Presidents, "vice presidents") => {
            member_label(TopicKey::Presidents, (i + 7) % 55)
        }
        (TopicKey::Presidents, "birth states") => STATES[(i * 4 + 2) % 15].to_string(),
        (TopicKey::Presidents, "previous occupations") => OCCUPATIONS[(i * 5) % 8].to_string(),

        (TopicKey::Elements, "atomic number") => format!("{}", i + 1),
        (TopicKey::Elements, "atomic mass") => {
            format!("{:.1} u", (20 * (i + 1) + (i * 3) % 10) as f64 / 10.0)
        }
        (TopicKey::Elements, "boiling point") => {
            format!("{:.1} K", 300.0 + ((i * 53) % 2500) as f64 + 0.5 * (i % 2) as f64)
        }
        (TopicKey::Elements, "melting point") => {
            let boiling = 300.0 + ((i * 53) % 2500) as f64 + 0.5 * (i % 2) as f64;
            format!("{:.1} K", boiling - 150.0 - (i % 35) as f64)
        }
        (TopicKey::Elements, "electron configuration") => {
            format!("2-8-{}-{}", 1 + i % 18, 1 + i % 32)
        }

        (TopicKey::Olympics, "host cities") => {
            member_label(TopicKey::Cities, olympics_host_index(i))
        }
        (TopicKey::Olympics, "number of participating countries") => {
            format!("{}", 14 + 6 * i + i % 4)
        }
        (TopicKey::Olympics, "total number of events") => format!("{}", 43 + 9 * i + 2 * (i % 3)),
        (TopicKey::Olympics, "medal tally") => format!("{}", 122 + (i * 67) % 420),
        (TopicKey::Olympics, "records broken") => format!("{}", (i * 13) % 29),

        (TopicKey::NobelChemistry, "categories") => CATEGORIES[(i * 3) % 5].to_string(),
        (TopicKey::NobelChemistry, "year of award") => format!("{}", 1901 + (i * 7) % 120),
        (TopicKey::NobelChemistry, "country of origin") => {
            country_cell(country_index(key, i), i / 20)
        }
        (TopicKey::NobelChemistry, "field of contribution") => {
            CONTRIBUTIONS[(i * 7) % 10].to_string()
        }

        _ => unreachable!("no value scheme for {key:?} / {property}"),
    }
}

/// Deterministic omission rule: roughly one property sentence in a thousand
/// is left out of the page intro, keyed on (entity id, property name).
pub fn omitted(entity_id: &str, property: &str) -> bool {
    let mut hasher = Sha256::new();
    hasher.update(entity_id.as_bytes());
    hasher.update(b"\n");
    hasher.update(property.as_bytes());
    let digest = hasher.finalize();
    let word = u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"));
    word % 1024 == 0
}

fn article(noun: &str) -> &'static str {
    match noun.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a') | Some('e') | Some('i') | Some('o') | Some('u') => "an",
        _ => "a",
    }
}

/// The raw page extract for one member, markup included.
pub fn intro_raw(key: TopicKey, i: usize) -> String {
    let spec = topic_spec(key);
    let label = member_label(key, i);
    let id = member_id(key, i);
    let mut out = format!(
        "'''{label}''' is {} {} listed in [[{}]].{{{{generated stub}}}}<ref name=\"gen\">synthetic corpus entry</ref>\n\n",
        article(spec.noun),
        spec.noun,
        spec.name,
    );
    let mut first = true;
    for p in spec.properties {
        if omitted(&id, p.name) {
            continue;
        }
        if !first {
            out.push(' ');
        }
        out.push_str(&format!("Its {} is {}.", p.name, raw_property_value(key, p.name, i)));
        first = false;
    }
    out
}

/// (omitted sentences, total property cells) across the whole world.
pub fn omission_counts() -> (usize, usize) {
    let mut omitted_cells = 0;
    let mut total = 0;
    for spec in &TOPICS {
        for i in 0..spec.count {
            let id = member_id(spec.key, i);
            for p in spec.properties {
                total += 1;
                if omitted(&id, p.name) {
                    omitted_cells += 1;
                }
            }
        }
    }
    (omitted_cells, total)
}

#[derive(Debug, Clone)]
pub struct SearchHit {
    pub id: String,
    pub label: String,
    pub description: String,
}

/// The built world: graph, pages and search indexes the offline transport
/// and the scripted model read from.
pub struct FixtureWorld {
    graph: WikiGraph,
    pages: HashMap<String, String>,
    item_index: HashMap<String, Vec<SearchHit>>,
    prop_index: HashMap<String, Vec<SearchHit>>,
    rel_sources: HashMap<(String, String), Vec<String>>,
    rel_targets: HashMap<(String, String), Vec<String>>,
    labels: HashMap<String, String>,
    member_topic: HashMap<String, TopicKey>,
}

impl FixtureWorld {
    pub fn build() -> FixtureWorld {
        let mut graph = WikiGraph::new();
        let mut pages = HashMap::new();
        let mut item_index: HashMap<String, Vec<SearchHit>> = HashMap::new();
        let mut prop_index: HashMap<String, Vec<SearchHit>> = HashMap::new();
        let mut rel_sources: HashMap<(String, String), Vec<String>> = HashMap::new();
        let mut rel_targets: HashMap<(String, String), Vec<String>> = HashMap::new();
        let mut labels = HashMap::new();
        let mut member_topic = HashMap::new();

        let add_item =
            |index: &mut HashMap<String, Vec<SearchHit>>, id: &str, label: &str, desc: &str| {
                index
                    .entry(label.to_lowercase())
                    .or_default()
                    .push(SearchHit {
                        id: id.to_string(),
                        label: label.to_string(),
                        description: desc.to_string(),
                    });
            };

        // Auxiliary entities first: countries, institutions, the decoy.
        for (c, variants) in COUNTRY_VARIANTS.iter().enumerate() {
            let id = country_id(c);
            let label = variants[0];
            graph.add_entity(EntityRef::new(&id, label)).expect("fresh id");
            labels.insert(id.clone(), label.to_string());
            add_item(&mut item_index, &id, label, "country");
        }
        for j in 0..30 {
            let id = institution_id(j);
            let label = institution_label(j);
            graph.add_entity(EntityRef::new(&id, &label)).expect("fresh id");
            labels.insert(id.clone(), label.clone());
            add_item(&mut item_index, &id, &label, "research institution");
        }
        graph
            .add_entity(EntityRef::new(DECOY_ID, "Presidents of the United States (band)"))
            .expect("fresh id");
        labels.insert(DECOY_ID.to_string(), "Presidents of the United States (band)".to_string());

        // Roots, membership relations, members, edges and pages.
        for spec in &TOPICS {
            graph.add_entity(EntityRef::new(spec.root_id, spec.name)).expect("fresh id");
            labels.insert(spec.root_id.to_string(), spec.name.to_string());
            graph
                .add_relation(RelationRef::new(spec.membership_pid, spec.membership_label))
                .expect("fresh id");
            if let Some(rel) = &spec.relation {
                // Relations are shared across specs only by id; re-adding the
                // same (id, label) pair is idempotent.
                graph.add_relation(RelationRef::new(rel.pid, rel.label)).expect("consistent label");
            }

            let root_hits = item_index.entry(spec.name.to_lowercase()).or_default();
            if spec.key == TopicKey::Presidents {
                // The topic name is deliberately ambiguous: a decoy ranks
                // first so id resolution has to disambiguate, not just take
                // the top hit.
                root_hits.push(SearchHit {
                    id: DECOY_ID.to_string(),
                    label: "Presidents of the United States (band)".to_string(),
                    description: "American rock band".to_string(),
                });
            }
            root_hits.push(SearchHit {
                id: spec.root_id.to_string(),
                label: spec.name.to_string(),
                description: format!("curated collection of {}", spec.noun_plural),
            });

            prop_index.entry(spec.membership_label.to_lowercase()).or_default().push(SearchHit {
                id: spec.membership_pid.to_string(),
                label: spec.membership_label.to_string(),
                description: format!("membership in {}", spec.name),
            });
            if let Some(rel) = &spec.relation {
                prop_index.entry(rel.label.to_lowercase()).or_default().push(SearchHit {
                    id: rel.pid.to_string(),
                    label: rel.label.to_string(),
                    description: format!("relational property of {}", spec.name),
                });
            }

            for i in 0..spec.count {
                let id = member_id(spec.key, i);
                let label = member_label(spec.key, i);
                graph.add_entity(EntityRef::new(&id, &label)).expect("fresh id");
                labels.insert(id.clone(), label.clone());
                member_topic.insert(label.to_lowercase(), spec.key);
                add_item(&mut item_index, &id, &label, spec.noun);
                pages.insert(label.clone(), intro_raw(spec.key, i));

                graph
                    .add_edge(Edge::new(&id, spec.root_id, spec.membership_pid))
                    .expect("nodes exist");
                rel_sources
                    .entry((spec.membership_pid.to_string(), spec.root_id.to_string()))
                    .or_default()
                    .push(id.clone());
                rel_targets
                    .entry((id.clone(), spec.membership_pid.to_string()))
                    .or_default()
                    .push(spec.root_id.to_string());
            }
        }

        // Relational edges, after all members exist (vice presidents and
        // host cities point at members).
        for spec in &TOPICS {
            let Some(rel) = &spec.relation else { continue };
            for i in 0..spec.count {
                let source = member_id(spec.key, i);
                let target = match spec.key {
                    TopicKey::Presidents => member_id(TopicKey::Presidents, (i + 7) % 55),
                    TopicKey::Olympics => member_id(TopicKey::Cities, olympics_host_index(i)),
                    TopicKey::Cities | TopicKey::NobelChemistry | TopicKey::AcmFellows => {
                        match spec.key {
                            TopicKey::AcmFellows => institution_id(i % 30),
                            _ => country_id(country_index(spec.key, i)),
                        }
                    }
                    TopicKey::Elements => unreachable!("elements carry no relation"),
                };
                graph.add_edge(Edge::new(&source, &target, rel.pid)).expect("nodes exist");
                rel_sources
                    .entry((rel.pid.to_string(), target.clone()))
                    .or_default()
                    .push(source.clone());
                rel_targets
                    .entry((source, rel.pid.to_string()))
                    .or_default()
                    .push(target);
            }
        }

        FixtureWorld {
            graph,
            pages,
            item_index,
            prop_index,
            rel_sources,
            rel_targets,
            labels,
            member_topic,
        }
    }

    pub fn graph(&self) -> &WikiGraph {
        &self.graph
    }

    pub fn page(&self, title: &str) -> Option<&str> {
        self.pages.get(title).map(String::as_str)
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    /// Search hits for a term; `kind_word` is the API word (`item` or
    /// `property`). Unknown terms yield an empty slice.
    pub fn search(&self, kind_word: &str, term: &str) -> &[SearchHit] {
        let index = if kind_word == "property" { &self.prop_index } else { &self.item_index };
        index.get(&term.to_lowercase()).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Sources `s` with an edge `s --pid--> target`, in member order.
    pub fn edge_sources(&self, pid: &str, target: &str) -> &[String] {
        self.rel_sources
            .get(&(pid.to_string(), target.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Targets `t` with an edge `source --pid--> t`.
    pub fn edge_targets(&self, source: &str, pid: &str) -> &[String] {
        self.rel_targets
            .get(&(source.to_string(), pid.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn topic_of_label(&self, label: &str) -> Option<TopicKey> {
        self.member_topic.get(&label.to_lowercase()).copied()
    }

    /// The per-topic graph relationship gold answers are computed over:
    /// members plus their relational edges, without the membership edges
    /// (membership would make every same-topic pair share the root).
    pub fn relational_graph(&self, key: TopicKey) -> WikiGraph {
        let spec = topic_spec(key);
        let mut g = WikiGraph::new();
        for i in 0..spec.count {
            g.add_entity(EntityRef::new(member_id(key, i), member_label(key, i)))
                .expect("fresh id");
        }
        let Some(rel) = &spec.relation else { return g };
        g.add_relation(RelationRef::new(rel.pid, rel.label)).expect("fresh id");
        for i in 0..spec.count {
            let source = member_id(key, i);
            for target in self.edge_targets(&source, rel.pid) {
                if g.entity(target).is_none() {
                    let label = self.label(target).unwrap_or(target);
                    g.add_entity(EntityRef::new(target, label)).expect("fresh id");
                }
                g.add_edge(Edge::new(&source, target, rel.pid)).expect("nodes exist");
            }
        }
        g
    }

    /// Benchmark topic configurations matching this world's membership
    /// queries. The root query text mirrors what the drafting stage
    /// produces, so warm caches from either path are interchangeable.
    pub fn topic_configs(&self) -> Vec<TopicConfig> {
        TOPICS
            .iter()
            .map(|spec| TopicConfig {
                name: spec.name.to_string(),
                root_query: Some(format!(
                    "SELECT ?entity ?entityLabel WHERE {{ ?entity wdt:{} wd:{} . \
                     ?entity rdfs:label ?entityLabel . }}",
                    spec.membership_pid, spec.root_id
                )),
                entity_ids: Vec::new(),
                properties: spec.properties.iter().map(|p| p.name.to_string()).collect(),
                expected_entities: Some(spec.count),
                entity_noun: spec.noun.to_string(),
                entity_noun_plural: spec.noun_plural.to_string(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn topic_counts_match_their_specs() {
        let world = FixtureWorld::build();
        for spec in topic_specs() {
            let members = world.edge_sources(spec.membership_pid, spec.root_id);
            assert_eq!(members.len(), spec.count, "{}", spec.name);
        }
        // 6 roots + 20 countries + 30 institutions + 1 decoy + members.
        let member_total: usize = topic_specs().iter().map(|s| s.count).sum();
        assert_eq!(member_total, 8605);
        assert_eq!(world.graph().entity_count(), member_total + 6 + 20 + 30 + 1);
        assert_eq!(world.page_count(), member_total);
    }

    #[test]
    fn labels_are_globally_unique() {
        let world = FixtureWorld::build();
        let mut seen = HashSet::new();
        for e in world.graph().entities() {
            assert!(seen.insert(e.label.clone()), "duplicate label {}", e.label);
        }
    }

    #[test]
    fn member_labels_avoid_frame_delimiters() {
        // Question frames split on these; a label containing one would be
        // mis-parsed by the scripted analyzer.
        for spec in topic_specs() {
            for i in 0..spec.count {
                let label = member_label(spec.key, i);
                for needle in [", ", " or ", "?", "'", "\""] {
                    assert!(!label.contains(needle), "{label} contains {needle:?}");
                }
            }
        }
    }

    #[test]
    fn world_build_is_deterministic() {
        let a = FixtureWorld::build();
        let b = FixtureWorld::build();
        assert_eq!(a.page_count(), b.page_count());
        for spec in topic_specs() {
            for i in 0..spec.count {
                let label = member_label(spec.key, i);
                assert_eq!(a.page(&label), b.page(&label));
            }
        }
    }

    #[test]
    fn intro_states_every_non_omitted_property() {
        for spec in topic_specs() {
            for i in (0..spec.count).step_by(7) {
                let id = member_id(spec.key, i);
                let intro = intro_raw(spec.key, i);
                for p in spec.properties {
                    let marker = format!("Its {} is ", p.name);
                    assert_eq!(
                        intro.contains(&marker),
                        !omitted(&id, p.name),
                        "{} / {}",
                        id,
                        p.name
                    );
                }
            }
        }
    }

    #[test]
    fn omission_rate_is_near_one_per_thousand_and_stable() {
        let (omitted_cells, total) = omission_counts();
        assert_eq!(total, 33_561);
        let rate = omitted_cells as f64 / total as f64;
        assert!(
            (0.0004..=0.002).contains(&rate),
            "omission rate {rate} (omitted {omitted_cells} of {total})"
        );
        assert_eq!((omitted_cells, total), omission_counts());
    }

    #[test]
    fn vice_president_values_agree_with_the_graph() {
        let world = FixtureWorld::build();
        for i in 0..55 {
            let written = raw_property_value(TopicKey::Presidents, "vice presidents", i);
            let source = member_id(TopicKey::Presidents, i);
            let targets = world.edge_targets(&source, "P211");
            assert_eq!(targets.len(), 1);
            assert_eq!(world.label(&targets[0]).unwrap(), written);
        }
    }

    #[test]
    fn relational_graph_drops_membership_edges() {
        let world = FixtureWorld::build();
        let g = world.relational_graph(TopicKey::Presidents);
        let p0 = member_id(TopicKey::Presidents, 0);
        let p7 = member_id(TopicKey::Presidents, 7);
        assert!(g.has_edge(&p0, &p7, "P211"));
        assert!(!g.has_edge(&p0, "Q103", "P103"));
        let elements = world.relational_graph(TopicKey::Elements);
        assert_eq!(elements.edges().count(), 0);
    }

    #[test]
    fn olympics_share_hosts_across_editions() {
        // Edition i and i+18 reuse a host; that is what gives hypothetical
        // relationship questions a populated true class.
        let a = raw_property_value(TopicKey::Olympics, "host cities", 0);
        let b = raw_property_value(TopicKey::Olympics, "host cities", 18);
        assert_eq!(a, b);
        let c = raw_property_value(TopicKey::Olympics, "host cities", 1);
        assert_ne!(a, c);
    }

    #[test]
    fn country_variants_cycle_through_aliases() {
        let dict = crate::table::SynonymDict::default_dict();
        let mut seen = HashSet::new();
        for salt in 0..6 {
            let cell = country_cell(0, salt);
            seen.insert(cell.clone());
            let canonical = dict.canonical(&cell).unwrap_or(&cell);
            assert_eq!(canonical, "United States");
        }
        assert!(seen.len() > 3, "aliases should actually vary: {seen:?}");
    }

    #[test]
    fn search_ranks_the_decoy_before_the_presidents_root() {
        let world = FixtureWorld::build();
        let hits = world.search("item", "Presidents of the United States");
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].id, DECOY_ID);
        assert_eq!(hits[1].id, "Q103");
        let single = world.search("item", "Chemical elements");
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].id, "Q104");
    }

    #[test]
    fn topic_configs_validate_and_name_real_columns() {
        let world = FixtureWorld::build();
        for cfg in world.topic_configs() {
            cfg.validate().unwrap();
            assert!(cfg.root_query.as_deref().unwrap().contains("?entity rdfs:label"));
        }
    }
}
