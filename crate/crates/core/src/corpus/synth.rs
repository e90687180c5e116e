//! Seeded synthetic corpora for four apps: an airline (the anchor), a
//! restaurant booker, a bus ticketing app and a home-rental app.
//!
//! Slot values come from lexicons split into an in-train pool and a
//! held-out pool. Held-out values are built from the same morpheme families
//! as the in-train ones ("Smokehouse" / "Korahouse", "Oakville" /
//! "Mibeville"), so a model that reads characters can recognise them while a
//! closed word table sees only the unknown token. Several templates are
//! shared between slot types of an app, leaving the value's own form as the
//! only cue to its type.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};

pub const ANCHOR_APP: &str = "united";

/// A shared affix such as the `house` in "steakhouse".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphemeFamily {
    pub affix: String,
    pub prefix: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSpec {
    pub name: String,
    pub train: Vec<String>,
    pub heldout: Vec<String>,
    /// Named-entity slot whose pool is skewed unless widened.
    pub named: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppSpec {
    pub name: String,
    pub slots: Vec<SlotSpec>,
    /// Sentence templates with `{Slot}` placeholders.
    pub templates: Vec<String>,
    pub families: Vec<MorphemeFamily>,
    pub max_slots: usize,
    pub lowercase: bool,
    /// Default number of sentences to generate.
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorOptions {
    /// Fraction of sentences whose values come from the held-out pools.
    pub oov_fraction: f64,
    /// Sample named-slot values uniformly instead of favouring a few.
    pub widen: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            oov_fraction: 0.2,
            widen: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteScale {
    /// Small enough for a full ablation on a laptop.
    Desk,
    /// Query counts of the original study.
    Paper,
}

enum Piece<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn pieces(template: &str) -> Result<Vec<Piece<'_>>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            out.push(Piece::Text(&rest[..open]));
        }
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| CorpusError::Config(format!("unclosed placeholder in {template:?}")))?;
        out.push(Piece::Slot(&rest[open + 1..open + close]));
        rest = &rest[open + close + 1..];
    }
    if !rest.is_empty() {
        out.push(Piece::Text(rest));
    }
    Ok(out)
}

impl AppSpec {
    pub fn slot(&self, name: &str) -> Option<&SlotSpec> {
        self.slots.iter().find(|s| s.name == name)
    }

    pub fn slot_names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.slots.iter().map(|s| s.name.clone()).collect();
        v.sort();
        v
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(CorpusError::Config(format!("{}: {m}", self.name)));
        if self.templates.is_empty() {
            return err("no templates".into());
        }
        for s in &self.slots {
            if s.train.is_empty() {
                return err(format!("slot {} has an empty lexicon", s.name));
            }
            let train: BTreeSet<&String> = s.train.iter().collect();
            if let Some(v) = s.heldout.iter().find(|v| train.contains(v)) {
                return err(format!("slot {}: {v:?} is in both pools", s.name));
            }
        }
        for t in &self.templates {
            let mut used = BTreeSet::new();
            for p in pieces(t)? {
                if let Piece::Slot(name) = p {
                    if self.slot(name).is_none() {
                        return err(format!("template {t:?} uses unknown slot {name}"));
                    }
                    if !used.insert(name) {
                        return err(format!("template {t:?} repeats {name}"));
                    }
                }
            }
            if used.len() > self.max_slots {
                return err(format!("template {t:?} has more than {} slots", self.max_slots));
            }
        }
        Ok(())
    }
}

fn app_seed(seed: u64, app: &str) -> u64 {
    // FNV-1a over the name keeps apps generated with one seed independent.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in app.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// `n` markup lines sampled from `spec`; identical for identical seeds.
pub fn generate_synthetic(spec: &AppSpec, n: usize, seed: u64, opts: &GeneratorOptions) -> Result<Vec<String>> {
    if n == 0 {
        return Err(CorpusError::Config("sentence count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&opts.oov_fraction) {
        return Err(CorpusError::Config(format!("oov fraction {} not in [0, 1]", opts.oov_fraction)));
    }
    spec.validate()?;
    let templates: Vec<Vec<Piece>> = spec.templates.iter().map(|t| pieces(t)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(app_seed(seed, &spec.name));
    let mut lines = Vec::with_capacity(n);
    for _ in 0..n {
        let template = templates.choose(&mut rng).expect("validated nonempty");
        let oov = rng.gen_bool(opts.oov_fraction);
        let mut line = String::new();
        for p in template {
            match p {
                Piece::Text(t) => line.push_str(t),
                Piece::Slot(name) => {
                    let slot = spec.slot(name).expect("validated");
                    let value = if oov && !slot.heldout.is_empty() {
                        slot.heldout.choose(&mut rng).unwrap()
                    } else if slot.named && !opts.widen && rng.gen_bool(0.7) {
                        slot.train[..slot.train.len().min(4)].choose(&mut rng).unwrap()
                    } else {
                        slot.train.choose(&mut rng).unwrap()
                    };
                    let value = if spec.lowercase {
                        value.to_lowercase()
                    } else {
                        value.clone()
                    };
                    line.push_str(&format!("<{name}> {value} </{name}>"));
                }
            }
        }
        lines.push(line);
    }
    Ok(lines)
}

// ---------------------------------------------------------------------------
// lexicons

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Pronounceable stems that are not English words, for held-out values.
fn synthetic_stems(count: usize, salt: u64) -> Vec<String> {
    const ONSETS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "sk"];
    const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];
    let mut rng = ChaCha8Rng::seed_from_u64(salt);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.gen_range(2..=3);
        let mut s = String::new();
        for _ in 0..syllables {
            s.push_str(ONSETS.choose(&mut rng).unwrap());
            s.push_str(VOWELS.choose(&mut rng).unwrap());
        }
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

fn compose(stems: &[String], affixes: &[&str], prefix: bool, cap: bool) -> Vec<String> {
    let mut out = Vec::with_capacity(stems.len() * affixes.len());
    for s in stems {
        for a in affixes {
            let w = if prefix { format!("{a}{s}") } else { format!("{s}{a}") };
            out.push(if cap { capitalize(&w) } else { w });
        }
    }
    out
}

fn families(affixes: &[&str], prefix: bool) -> Vec<MorphemeFamily> {
    affixes
        .iter()
        .map(|a| MorphemeFamily {
            affix: a.to_string(),
            prefix,
        })
        .collect()
}

const CITY_SUFFIXES: &[&str] = &["ville", "burg", "ton", "field", "ford", "dale", "wood", "port"];
const CITY_STEMS: &[&str] = &[
    "oak", "elm", "maple", "cedar", "pine", "ash", "birch", "willow", "stone", "clay", "iron", "silver", "green",
    "brook", "fair", "rock", "sand", "spring", "mill", "glen", "red", "white", "king", "lake",
];
const REAL_CITIES: &[&str] = &[
    "Burbank", "St Petersburg", "San Jose", "Chicago", "Denver", "Boston", "Seattle", "Austin", "Dallas", "Portland",
    "Phoenix", "New York", "Los Angeles", "Salt Lake City", "Las Vegas", "San Diego", "El Paso", "Miami", "Atlanta",
    "Houston", "Reno", "Tucson", "Fresno", "Omaha",
];
const BAY_TAILS: &[&str] = &["view", "side", "shore", "point", "ridge", "wood", "field", "port", "crest", "haven"];

fn cities() -> (Vec<String>, Vec<String>) {
    let stems = strs(CITY_STEMS);
    let mut train = compose(&stems, CITY_SUFFIXES, false, true);
    train.extend(strs(REAL_CITIES));
    let held = compose(&synthetic_stems(40, 11), CITY_SUFFIXES, false, true);
    (train, held)
}

fn bay_places() -> (Vec<String>, Vec<String>) {
    let train = BAY_TAILS.iter().map(|t| format!("Bay{t}")).collect();
    let held = synthetic_stems(60, 12).iter().map(|s| format!("Bay{s}")).collect();
    (train, held)
}

fn dates() -> Vec<String> {
    let months = ["Jan", "Feb", "March", "April", "May", "June", "July", "Aug", "Sept", "Oct", "Nov", "Dec"];
    let days = ["1", "3", "4", "7", "9", "11", "12", "15", "18", "20", "22", "25", "28", "30"];
    let mut out = Vec::new();
    for (i, m) in months.iter().enumerate() {
        for (j, d) in days.iter().enumerate() {
            if (i + j) % 3 == 0 {
                out.push(format!("{m} {d}"));
            } else if (i + j) % 3 == 1 {
                out.push(format!("{m} {d}th"));
            }
        }
    }
    out.extend(strs(&[
        "tomorrow",
        "friday",
        "next friday",
        "this saturday",
        "next monday",
        "sunday",
        "the 15th",
        "the 3rd",
        "next week",
        "this weekend",
    ]));
    out
}

fn times() -> Vec<String> {
    strs(&[
        "8:30 pm", "7 pm", "noon", "6:15", "9 am", "midnight", "7:45", "10:30 am", "5 pm", "6 in the evening",
        "11:15", "lunchtime", "8 pm", "1:30", "early morning", "3 pm",
    ])
}

fn counts() -> Vec<String> {
    strs(&["1", "2", "3", "4", "5", "6", "8", "10", "12", "one", "two", "three", "four", "five", "six"])
}

fn united() -> AppSpec {
    let (city, city_held) = cities();
    let loc = |name: &str| SlotSpec {
        name: name.into(),
        train: city.clone(),
        heldout: city_held.clone(),
        named: false,
    };
    let plain = |name: &str, train: Vec<String>| SlotSpec {
        name: name.into(),
        train,
        heldout: Vec::new(),
        named: false,
    };
    let slots = vec![
        loc("FromLoc"),
        loc("ToLoc"),
        loc("FromLoc2"),
        loc("ToLoc2"),
        plain("DepartDate", dates()),
        plain("ReturnDate", dates()),
        plain("DepartDate2", dates()),
        plain("ReturnDate2", dates()),
        plain("NumTickets", counts()),
        plain("Nonstop", strs(&["nonstop", "direct", "non-stop", "no layovers"])),
        plain(
            "TicketClass",
            strs(&["economy", "business class", "first class", "premium economy", "coach", "business"]),
        ),
        plain("TripType", strs(&["one way", "round trip", "roundtrip", "multi city", "return"])),
    ];
    let templates = strs(&[
        "please book flight from {FromLoc} to {ToLoc}",
        "i need a flight from {FromLoc} to {ToLoc} on {DepartDate}",
        "fly me to {ToLoc} leaving {DepartDate} and returning {ReturnDate}",
        "book {NumTickets} {TicketClass} tickets from {FromLoc} to {ToLoc}",
        "find a {Nonstop} flight to {ToLoc}",
        "i want a {TripType} ticket from {FromLoc} to {ToLoc}",
        "from {FromLoc} to {ToLoc} then {FromLoc2} to {ToLoc2}",
        "fly to {ToLoc} {DepartDate} and on to {ToLoc2} {DepartDate2}",
        "depart {DepartDate} return {ReturnDate}",
        "{TicketClass} seats for {NumTickets} please",
        "leaving from {FromLoc} on {DepartDate}",
        "get me to {ToLoc} by {DepartDate}",
        "second leg from {FromLoc2} to {ToLoc2} returning {ReturnDate2}",
        "search {TripType} flights to {ToLoc} {Nonstop}",
        "i want to go to {ToLoc}",
        "book a flight on {DepartDate}",
        "show {Nonstop} flights from {FromLoc} on {DepartDate} returning {ReturnDate}",
        "{NumTickets} tickets to {ToLoc} in {TicketClass}",
        "the second flight leaves {DepartDate2} and comes back {ReturnDate2}",
        "book a {TripType} from {FromLoc}",
        "flights out of {FromLoc}",
        "i need {NumTickets} seats",
    ]);
    AppSpec {
        name: ANCHOR_APP.into(),
        slots,
        templates,
        families: families(CITY_SUFFIXES, false),
        max_slots: 4,
        lowercase: true,
        size: 2000,
    }
}

const RESTAURANT_SUFFIXES: &[&str] = &["house", "shack", "hall", "kitchen", "bar"];

fn opentable() -> AppSpec {
    let rest_stems = strs(&[
        "smoke", "steak", "road", "chop", "ale", "brew", "pie", "noodle", "taco", "burger", "oyster", "crab", "pizza",
        "curry", "dumpling", "waffle",
    ]);
    let mut rest_held = compose(
        &strs(&["fish", "chicken", "rib", "clam", "wine", "rice", "bean", "pho"]),
        RESTAURANT_SUFFIXES,
        false,
        true,
    );
    rest_held.extend(compose(&synthetic_stems(40, 21), RESTAURANT_SUFFIXES, false, true));
    let cuisine_train = strs(&[
        "Japanese", "Chinese", "Vietnamese", "Thai", "Italian", "Indian", "Mexican", "Korean", "French", "Greek",
        "Spanish", "Turkish", "Peruvian", "Brazilian", "Lebanese", "Ethiopian", "American", "Sushi", "Vegan",
    ]);
    let mut cuisine_held = strs(&[
        "Taiwanese", "Nepalese", "Sicilian", "Cambodian", "Polish", "Danish", "Burmese", "Moroccan", "Tunisian",
        "Malaysian", "Persian", "Cuban", "Argentinian", "Senegalese", "Irish", "Swedish", "Hungarian", "Georgian",
        "Portuguese", "Filipino", "Bolivian", "Armenian", "Syrian", "Jamaican",
    ]);
    cuisine_held.extend(compose(&synthetic_stems(30, 22), &["ese", "ian", "ish"], false, true));
    let street_kinds = ["Street", "Avenue", "Square", "Plaza"];
    let street_stems = strs(&[
        "Castro", "Market", "Mission", "Valencia", "Main", "Broad", "Union", "Church", "Park", "Center", "Harbor",
        "Grant", "Hayes", "Polk",
    ]);
    let mut loc_train: Vec<String> = street_stems
        .iter()
        .flat_map(|s| street_kinds.iter().map(move |k| format!("{s} {k}")))
        .collect();
    let (bay, bay_held) = bay_places();
    loc_train.extend(bay);
    let mut loc_held: Vec<String> = synthetic_stems(30, 23)
        .iter()
        .flat_map(|s| street_kinds.iter().map(move |k| format!("{} {k}", capitalize(s))))
        .collect();
    loc_held.extend(bay_held);

    let named = |name: &str, train: Vec<String>, heldout: Vec<String>| SlotSpec {
        name: name.into(),
        train,
        heldout,
        named: true,
    };
    let plain = |name: &str, train: Vec<String>| SlotSpec {
        name: name.into(),
        train,
        heldout: Vec::new(),
        named: false,
    };
    let slots = vec![
        named("Cuisine", cuisine_train, cuisine_held),
        named("RestaurantName", compose(&rest_stems, RESTAURANT_SUFFIXES, false, true), rest_held),
        named("Loc", loc_train, loc_held),
        plain("Date", dates()),
        plain("Time", times()),
        plain("NumPeople", counts()),
    ];
    let mut templates = strs(&[
        "Let's do something on {Loc}",
        "We could meet near {Loc} .",
        "Somewhere around {Loc} would be nice",
        "Let's eat {Cuisine} food tonight",
        "I'm craving {Cuisine} .",
        "Do you like {Cuisine} ?",
        "Book a table at {RestaurantName} .",
        "Have you been to {RestaurantName} ?",
        "My sister loves {RestaurantName}",
        "Can we go on {Date} ?",
        "Let's make it {Date} .",
        "How about dinner at {Time} ?",
        "I can't make it before {Time}",
        "There will be {NumPeople} of us .",
        "Get a table for {NumPeople} please",
        "We are a party of {NumPeople}",
    ]);
    templates.extend(shared(
        &[
            "What about {} ?",
            "I was thinking {} .",
            "{} sounds good to me",
            "Let's try {} this time",
            "Maybe {} ?",
        ],
        &["Cuisine", "RestaurantName", "Loc"],
    ));
    AppSpec {
        name: "opentable".into(),
        slots,
        templates,
        families: families(RESTAURANT_SUFFIXES, false),
        max_slots: 1,
        lowercase: false,
        size: 1400,
    }
}

/// One template per (pattern, slot) pair, so the context alone does not
/// identify the slot.
fn shared(patterns: &[&str], slots: &[&str]) -> Vec<String> {
    patterns
        .iter()
        .flat_map(|p| slots.iter().map(move |s| p.replace("{}", &format!("{{{s}}}"))))
        .collect()
}

fn greyhound() -> AppSpec {
    let (city, city_held) = cities();
    let promo_train = strs(&[
        "SAVE10", "BUS20", "SPRING15", "FALL5", "HOLIDAY25", "ROAD30", "GO15", "TRIP10", "RIDE5", "WINTER20",
    ]);
    let promo_held: Vec<String> = synthetic_stems(60, 31)
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}{}", s.to_uppercase(), 5 * (i % 8 + 1)))
        .collect();
    let slot = |name: &str, train: Vec<String>, heldout: Vec<String>| SlotSpec {
        name: name.into(),
        train,
        heldout,
        named: false,
    };
    let slots = vec![
        slot("DepartDate", dates(), vec![]),
        slot("DepartTime", times(), vec![]),
        slot("ReturnDate", dates(), vec![]),
        slot("ReturnTime", times(), vec![]),
        slot("LeavingFrom", city.clone(), city_held.clone()),
        slot("GoingTo", city, city_held),
        slot("NumChildren", counts(), vec![]),
        slot("NumAdults", counts(), vec![]),
        slot("NumSeniors", counts(), vec![]),
        slot("PromoCode", promo_train, promo_held),
        slot(
            "DiscountType",
            strs(&["student", "military", "senior", "veteran", "companion", "child", "advantage"]),
            vec![],
        ),
        slot("OneWay", strs(&["one way", "one-way", "no return", "just one way"]), vec![]),
        slot(
            "Wheelchair",
            strs(&["wheelchair", "wheelchair access", "a wheelchair spot", "accessible seating"]),
            vec![],
        ),
    ];
    let mut templates = strs(&[
        "We should return on {ReturnDate}",
        "We'll leave on {DepartDate} .",
        "Let's head out {DepartDate}",
        "The bus leaves at {DepartTime} .",
        "I'd rather go at {DepartTime}",
        "Coming back at {ReturnTime} works",
        "We could return around {ReturnTime}",
        "We're leaving from {LeavingFrom} .",
        "Let's catch it in {LeavingFrom}",
        "We need to get to {GoingTo} .",
        "Let's go to {GoingTo}",
        "There are {NumChildren} kids coming",
        "Bring {NumChildren} children too",
        "It's {NumAdults} adults",
        "We have {NumSeniors} seniors with us",
        "Use promo code {PromoCode}",
        "I have the code {PromoCode} .",
        "We get the {DiscountType} discount",
        "Ask for a {DiscountType} fare",
        "Let's make it {OneWay}",
        "I'll need {Wheelchair} .",
        "Remember we need {Wheelchair}",
    ]);
    templates.extend(shared(
        &["Can we use {} ?", "Don't forget {} .", "Let's use {}"],
        &["PromoCode", "DiscountType"],
    ));
    templates.extend(shared(&["How about {} ?", "{} is fine"], &["DepartDate", "DepartTime"]));
    templates.extend(shared(
        &["Put down {} .", "It's {}", "Just write {}"],
        &["GoingTo", "PromoCode"],
    ));
    AppSpec {
        name: "greyhound".into(),
        slots,
        templates,
        families: families(CITY_SUFFIXES, false),
        max_slots: 1,
        lowercase: false,
        size: 1650,
    }
}

fn airbnb() -> AppSpec {
    let (mut city, mut city_held) = cities();
    let (bay, bay_held) = bay_places();
    city.extend(bay);
    city_held.extend(bay_held);
    let listing_train = strs(&[
        "treehouse",
        "farmhouse",
        "guesthouse",
        "townhouse",
        "boathouse",
        "cottage",
        "cabin",
        "condo",
        "loft",
        "bungalow",
        "villa",
        "apartment",
        "chalet",
        "studio",
    ]);
    let mut listing_held = strs(&[
        "roundhouse",
        "lighthouse",
        "clubhouse",
        "coachhouse",
        "bunkhouse",
        "schoolhouse",
        "greenhouse",
        "cookhouse",
        "gatehouse",
        "carriagehouse",
    ]);
    listing_held.extend(compose(&synthetic_stems(30, 41), &["house"], false, false));
    let prices = strs(&[
        "$1300 per week",
        "$95 a night",
        "$200",
        "150 dollars",
        "$80 per night",
        "$500 a week",
        "$120",
        "$60",
        "300 dollars",
        "$2000 a month",
    ]);
    let slot = |name: &str, train: Vec<String>, heldout: Vec<String>| SlotSpec {
        name: name.into(),
        train,
        heldout,
        named: false,
    };
    let slots = vec![
        slot("NumPeople", counts(), vec![]),
        slot(
            "RoomType",
            strs(&["private room", "shared room", "entire home", "entire apartment", "whole place"]),
            vec![],
        ),
        slot(
            "Amenities",
            strs(&[
                "wifi",
                "a pool",
                "a hot tub",
                "free parking",
                "a kitchen",
                "a washer",
                "air conditioning",
                "a fireplace",
                "a gym",
                "a balcony",
            ]),
            vec![],
        ),
        slot("StartDate", dates(), vec![]),
        slot("EndDate", dates(), vec![]),
        slot(
            "DateRange",
            strs(&[
                "next week",
                "this weekend",
                "the week of March 4",
                "Jan 3 to Jan 10",
                "the whole month",
                "two weeks in June",
                "labor day weekend",
            ]),
            vec![],
        ),
        slot("Location", city, city_held),
        slot("ListingType", listing_train, listing_held),
        slot("Price", prices.clone(), vec![]),
        slot("PriceLower", prices.clone(), vec![]),
        slot("PriceUpper", prices, vec![]),
    ];
    let mut templates = strs(&[
        "I want to keep the price below {PriceUpper} .",
        "Nothing over {PriceUpper}",
        "At least {PriceLower} is fine",
        "Nothing cheaper than {PriceLower}",
        "Something around {Price}",
        "We can pay {Price} .",
        "Find a place in {Location} .",
        "Let's stay near {Location}",
        "We need room for {NumPeople}",
        "There are {NumPeople} of us .",
        "It should have {Amenities} .",
        "Make sure there is {Amenities}",
        "A {RoomType} is fine",
        "We want the {RoomType}",
        "Check in {StartDate}",
        "We arrive {StartDate} .",
        "Check out {EndDate}",
        "We leave {EndDate} .",
        "We'll be there {DateRange}",
        "Book it for {DateRange} .",
        "Let's rent a {ListingType} .",
    ]);
    templates.extend(shared(
        &["What about a {} ?", "Maybe a {}", "I'd love a {}"],
        &["ListingType", "RoomType"],
    ));
    templates.extend(shared(
        &["How about {} ?", "I'm thinking {} .", "{} looks great"],
        &["ListingType", "Location"],
    ));
    AppSpec {
        name: "airbnb".into(),
        slots,
        templates,
        families: families(&["house"], false),
        max_slots: 1,
        lowercase: false,
        size: 1550,
    }
}

/// The four-app suite, anchor first.
pub fn default_suite(scale: SuiteScale) -> Vec<AppSpec> {
    let mut apps = vec![united(), opentable(), greyhound(), airbnb()];
    if scale == SuiteScale::Paper {
        for (a, n) in apps.iter_mut().zip([20697, 3151, 4951, 4666]) {
            a.size = n;
        }
    }
    apps
}
