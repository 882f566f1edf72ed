//! Seeded synthetic corpora and name lists.
//!
//! Used by benchmarks, the acceptance suite and demos: a newswire-style
//! corpus with all four classes, fantasy-style person names, and a narrative
//! corpus annotated for PER only.

use std::collections::BTreeSet;

use crate::corpus::{Document, Sentence, Token};
use crate::label::{EntityClass, NerLabel};
use crate::namegen::NameInventory;
use crate::rng::SeededSampler;

const NEWS_FIRST: &[&str] = &[
    "John", "Mary", "Peter", "David", "Michael", "Susan", "Robert", "James", "Linda", "Thomas",
    "Paul", "Mark", "Karen", "George", "Helen", "Richard", "Carlos", "Anna", "Boris", "Jacques",
    "Helmut", "Yasser", "Nelson", "Bill", "Tony", "Steffi", "Andre", "Pete", "Martina", "Kevin",
];
const NEWS_LAST: &[&str] = &[
    "Smith", "Johnson", "Clinton", "Yeltsin", "Blair", "Major", "Kohl", "Arafat", "Mandela",
    "Agassi", "Sampras", "Graf", "Hingis", "Brown", "Miller", "Wilson", "Moore", "Taylor",
    "Anderson", "Jackson", "White", "Harris", "Martin", "Thompson", "Garcia", "Chirac", "Dole",
];
const NEWS_ORG: &[&[&str]] = &[
    &["Reuters"], &["EU"], &["NATO"], &["Microsoft"], &["Bundesbank"], &["U.N."],
    &["European", "Commission"], &["Ford", "Motor"], &["Manchester", "United"], &["IBM"],
    &["World", "Bank"], &["Labour", "Party"], &["Fed"], &["OPEC"], &["Nasdaq"],
];
const NEWS_LOC: &[&[&str]] = &[
    &["London"], &["Germany"], &["Moscow"], &["Paris"], &["Washington"], &["Japan"],
    &["New", "York"], &["Britain"], &["China"], &["Brussels"], &["Tokyo"], &["Israel"],
    &["South", "Africa"], &["Bonn"], &["Chicago"],
];
const NEWS_MISC: &[&[&str]] = &[
    &["German"], &["British"], &["Russian"], &["French"], &["American"], &["Japanese"],
    &["World", "Cup"], &["Olympic"], &["Israeli"], &["European"],
];

const NEWS_TEMPLATES: &[&str] = &[
    "{PER} said on Tuesday that {ORG} would cut jobs .",
    "{ORG} shares rose 2 percent in {LOC} trading .",
    "{PER} , the {MISC} minister , arrived in {LOC} on Monday .",
    "\" We are very happy , \" {PER} told reporters .",
    "{LOC} beat {LOC} 2-1 in the {MISC} qualifier .",
    "The {MISC} government denied the report .",
    "{PER} met {PER} in {LOC} to discuss trade .",
    "Officials at {ORG} declined to comment .",
    "{PER} won the match 6-3 6-4 .",
    "Prices fell sharply on {ORG} after the announcement .",
    "{ORG} said profits would rise this year .",
    "Police in {LOC} arrested two men on Friday .",
    "{PER} of {LOC} finished second behind {PER} .",
    "The {MISC} team arrived in {LOC} late on Sunday .",
    "Analysts expect the {ORG} to hold rates steady .",
    "{PER} , who joined {ORG} in 1990 , will retire .",
    "Talks between {LOC} and {LOC} resumed on Thursday .",
    "Trading volume was light at 120 million shares .",
];

const STORY_TEMPLATES: &[&str] = &[
    "{PER} stood , and as he did , his eyes fell on the city again .",
    "\" Come here , \" {PER} whispered .",
    "{PER} looked at {PER} and shook her head .",
    "The old man turned to {PER} .",
    "It was raining when {PER} reached the gate .",
    "{PER} drew his sword and waited .",
    "She had not seen {PER} since the winter .",
    "\" You are late , \" said {PER} .",
    "Nobody in the village trusted {PER} anymore .",
    "{PER} laughed , and {PER} laughed with him .",
    "The wind carried the smell of smoke across the hills .",
    "They walked for hours without a word .",
    "{PER} 's father had been a smith .",
    "Behind the door , {PER} heard voices .",
];

const SYLLABLE_ONSETS: &[&str] = &[
    "Ts", "Dr", "Th", "K", "V", "Z", "Ael", "Xa", "Qu", "Br", "Gal", "Rao", "Sz", "Mor", "Ul",
    "Yr", "Kh", "Jez", "Sel", "Ar", "Il", "Fen", "Gor", "Hal", "Lor", "Nym", "Or", "Syl", "Tor", "Ves",
];
const SYLLABLE_MIDDLES: &[&str] = &[
    "ar", "ra", "io", "el", "ad", "ri", "ae", "on", "yl", "ath", "ui", "es", "ul", "iri", "en", "or",
];
const SYLLABLE_ENDS: &[&str] = &[
    "osa", "ius", "den", "eth", "ion", "ara", "ril", "wyn", "dor", "iel", "ax", "yth", "uul",
    "as", "ien", "oth", "ira", "us", "en", "and",
];
const WORD_NAMES: &[&str] = &[
    "Mercy", "Valor", "Chivalry", "Weasel", "Bug", "Cob", "Thorn", "Ash", "Raven", "Wren",
];

fn pick<'a, T>(sampler: &mut SeededSampler, items: &'a [T]) -> &'a T {
    &items[sampler.below(items.len())]
}

/// `count` distinct fantasy-style name tokens (some apostrophed, some word names).
pub fn fantasy_names(count: usize, seed: u64) -> Vec<String> {
    let mut sampler = SeededSampler::new(seed, 0);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(count);
    for &w in WORD_NAMES.iter().take(count / 20) {
        seen.insert(w.to_string());
        out.push(w.to_string());
    }
    let mut attempts = 0;
    while out.len() < count && attempts < count * 100 {
        attempts += 1;
        let mut name = pick(&mut sampler, SYLLABLE_ONSETS).to_string();
        for _ in 0..sampler.below(3) {
            name.push_str(pick(&mut sampler, SYLLABLE_MIDDLES));
        }
        if sampler.below(6) == 0 {
            name.push('\'');
        }
        name.push_str(pick(&mut sampler, SYLLABLE_ENDS));
        if seen.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

/// Two disjoint fantasy inventories: one for augmentation, one held out for
/// building evaluation data.
pub fn split_fantasy_inventories(size: usize, seed: u64) -> (NameInventory, NameInventory) {
    let mut names = fantasy_names(size * 2, seed);
    SeededSampler::new(seed, 1).shuffle(&mut names);
    let half = names.len() / 2;
    let build = |part: &[String]| {
        let cut = part.len() * 3 / 4;
        NameInventory::new(part[..cut].to_vec(), part[cut..].to_vec(), vec![], vec![])
            .expect("generated names are non-empty")
    };
    (build(&names[..half]), build(&names[half..]))
}

fn push_tokens(tokens: &mut Vec<Token>, words: &[&str], class: Option<EntityClass>) {
    for (i, w) in words.iter().enumerate() {
        let label = match class {
            None => NerLabel::O,
            Some(c) if i == 0 => NerLabel::B(c),
            Some(c) => NerLabel::I(c),
        };
        tokens.push(Token::new(*w, label).expect("synthetic tokens are valid"));
    }
}

fn fill<F>(template: &str, mut slot: F) -> Sentence
where
    F: FnMut(&str, &mut Vec<Token>),
{
    let mut tokens = Vec::new();
    for word in template.split(' ') {
        if word.starts_with('{') && word.ends_with('}') {
            slot(&word[1..word.len() - 1], &mut tokens);
        } else {
            push_tokens(&mut tokens, &[word], None);
        }
    }
    Sentence::new(tokens)
}

/// Newswire-style sentences with PER, ORG, LOC and MISC mentions.
pub fn news_corpus(sentences: usize, seed: u64) -> Vec<Document> {
    let mut sampler = SeededSampler::new(seed, 0);
    let mut docs = Vec::new();
    let mut current = Vec::new();
    for i in 0..sentences {
        let template = *pick(&mut sampler, NEWS_TEMPLATES);
        let sentence = fill(template, |slot, tokens| match slot {
            "PER" => {
                let words: Vec<&str> = match sampler.below(3) {
                    0 => vec![pick(&mut sampler, NEWS_FIRST)],
                    1 => vec![pick(&mut sampler, NEWS_LAST)],
                    _ => vec![pick(&mut sampler, NEWS_FIRST), pick(&mut sampler, NEWS_LAST)],
                };
                push_tokens(tokens, &words, Some(EntityClass::Per));
            }
            "ORG" => push_tokens(tokens, pick(&mut sampler, NEWS_ORG), Some(EntityClass::Org)),
            "LOC" => push_tokens(tokens, pick(&mut sampler, NEWS_LOC), Some(EntityClass::Loc)),
            _ => push_tokens(tokens, pick(&mut sampler, NEWS_MISC), Some(EntityClass::Misc)),
        });
        current.push(sentence);
        if current.len() == 25 || i + 1 == sentences {
            docs.push(Document::new(docs.len().to_string(), std::mem::take(&mut current)));
        }
    }
    docs
}

/// Narrative sentences whose person mentions come from `names` (first names,
/// optionally followed by a last name). Only PER is annotated.
pub fn story_corpus(sentences: usize, names: &NameInventory, seed: u64) -> Vec<Document> {
    let mut sampler = SeededSampler::new(seed, 0);
    let mut docs = Vec::new();
    let mut current = Vec::new();
    for i in 0..sentences {
        let template = *pick(&mut sampler, STORY_TEMPLATES);
        let sentence = fill(template, |_, tokens| {
            let mut words: Vec<&str> = Vec::new();
            words.extend(pick(&mut sampler, &names.first_names).split(' '));
            if !names.last_names.is_empty() && sampler.below(4) == 0 {
                words.extend(pick(&mut sampler, &names.last_names).split(' '));
            }
            push_tokens(tokens, &words, Some(EntityClass::Per));
        });
        current.push(sentence);
        if current.len() == 50 || i + 1 == sentences {
            docs.push(Document::new(docs.len().to_string(), std::mem::take(&mut current)));
        }
    }
    docs
}
