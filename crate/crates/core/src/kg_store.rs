//! Triple ingestion, vocabulary building and the filter index used by the
//! filtered ranking protocol.
//!
//! Raw files hold one fact per line with exactly three tab-separated fields.
//! Names are mapped to dense 0-based ids in first-appearance order, scanning
//! the training split first, then validation, then test.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

/// Column layout of a raw triple file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ColumnOrder {
    /// head, relation, tail
    #[default]
    Hrt,
    /// head, tail, relation
    Htr,
}

impl FromStr for ColumnOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hrt" => Ok(Self::Hrt),
            "htr" => Ok(Self::Htr),
            _ => Err(Error::UnknownName {
                what: "column order",
                name: s.to_string(),
                valid: "hrt, htr",
            }),
        }
    }
}

/// A fact as it appears in a raw file, before encoding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl RawTriple {
    pub fn new(head: &str, relation: &str, tail: &str) -> Self {
        Self {
            head: head.to_string(),
            relation: relation.to_string(),
            tail: tail.to_string(),
        }
    }
}

/// Integer-encoded `(head, tail, relation)` fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: usize,
    pub tail: usize,
    pub relation: usize,
}

impl Triple {
    pub const fn new(head: usize, tail: usize, relation: usize) -> Self {
        Self {
            head,
            tail,
            relation,
        }
    }

    /// Packs the triple into a single integer key; distinct triples always
    /// map to distinct keys while every id fits in 32 bits.
    pub fn key(&self) -> u128 {
        debug_assert!(self.head <= u32::MAX as usize);
        debug_assert!(self.tail <= u32::MAX as usize);
        debug_assert!(self.relation <= u32::MAX as usize);
        ((self.head as u128) << 64) | ((self.tail as u128) << 32) | self.relation as u128
    }

    pub fn with_head(self, head: usize) -> Self {
        Self { head, ..self }
    }

    pub fn with_tail(self, tail: usize) -> Self {
        Self { tail, ..self }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.head, self.tail, self.relation)
    }
}

/// Reads a raw triple file. Empty lines are skipped; every other line must
/// contain exactly three tab-separated fields.
pub fn parse_triples(path: impl AsRef<Path>, order: ColumnOrder) -> Result<Vec<RawTriple>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    parse_triples_from(BufReader::new(file), path, order)
}

/// Same as [`parse_triples`] over any buffered reader; `origin` is only used
/// in error messages.
pub fn parse_triples_from<R: BufRead>(
    reader: R,
    origin: &Path,
    order: ColumnOrder,
) -> Result<Vec<RawTriple>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(origin))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::MalformedLine {
                path: origin.to_path_buf(),
                line: idx + 1,
                got: fields.len(),
            });
        }
        let (h, r, t) = match order {
            ColumnOrder::Hrt => (fields[0], fields[1], fields[2]),
            ColumnOrder::Htr => (fields[0], fields[2], fields[1]),
        };
        out.push(RawTriple::new(h, r, t));
    }
    Ok(out)
}

/// Dense name <-> id maps for entities and relations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entity_names: Vec<String>,
    relation_names: Vec<String>,
    entity_ids: HashMap<String, usize>,
    relation_ids: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary from ordered name lists. Duplicate names keep
    /// their first index.
    pub fn from_names(entities: Vec<String>, relations: Vec<String>) -> Self {
        let mut vocab = Self::new();
        for e in &entities {
            vocab.add_entity(e);
        }
        for r in &relations {
            vocab.add_relation(r);
        }
        vocab
    }

    pub fn add_entity(&mut self, name: &str) -> usize {
        intern(&mut self.entity_names, &mut self.entity_ids, name)
    }

    pub fn add_relation(&mut self, name: &str) -> usize {
        intern(&mut self.relation_names, &mut self.relation_ids, name)
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relation_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: usize) -> Option<&str> {
        self.entity_names.get(id).map(String::as_str)
    }

    pub fn relation_name(&self, id: usize) -> Option<&str> {
        self.relation_names.get(id).map(String::as_str)
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn num_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_names.len()
    }

    /// Encodes a raw triple against the existing vocabulary.
    pub fn encode(&self, raw: &RawTriple) -> Option<Triple> {
        Some(Triple::new(
            self.entity_id(&raw.head)?,
            self.entity_id(&raw.tail)?,
            self.relation_id(&raw.relation)?,
        ))
    }

    pub fn decode(&self, t: &Triple) -> Option<RawTriple> {
        Some(RawTriple::new(
            self.entity_name(t.head)?,
            self.relation_name(t.relation)?,
            self.entity_name(t.tail)?,
        ))
    }

    /// Writes `entities.txt` and `relations.txt` into `dir`, one name per
    /// line, line number = id.
    pub fn save(&self, dir: &Path) -> Result<()> {
        write_names(&dir.join(ENTITIES_FILE), &self.entity_names)?;
        write_names(&dir.join(RELATIONS_FILE), &self.relation_names)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let entities = read_names(&dir.join(ENTITIES_FILE))?;
        let relations = read_names(&dir.join(RELATIONS_FILE))?;
        Ok(Self::from_names(entities, relations))
    }
}

fn intern(names: &mut Vec<String>, ids: &mut HashMap<String, usize>, name: &str) -> usize {
    if let Some(&id) = ids.get(name) {
        return id;
    }
    let id = names.len();
    names.push(name.to_string());
    ids.insert(name.to_string(), id);
    id
}

const ENTITIES_FILE: &str = "entities.txt";
const RELATIONS_FILE: &str = "relations.txt";

fn write_names(path: &Path, names: &[String]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for name in names {
        writeln!(w, "{name}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_names(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Exact membership set over every known-valid triple.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    keys: HashSet<u128>,
}

impl FilterIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_splits<'a>(splits: impl IntoIterator<Item = &'a [Triple]>) -> Self {
        let mut index = Self::new();
        for split in splits {
            for t in split {
                index.insert(*t);
            }
        }
        index
    }

    pub fn insert(&mut self, t: Triple) -> bool {
        self.keys.insert(t.key())
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.keys.contains(&t.key())
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Which portion of a dataset to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Self::Train),
            "valid" | "validation" => Ok(Self::Valid),
            "test" => Ok(Self::Test),
            _ => Err(Error::UnknownName {
                what: "split",
                name: s.to_string(),
                valid: "train, valid, test",
            }),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        })
    }
}

/// Encoded dataset with its vocabulary and filter index. Immutable once built.
#[derive(Debug, Clone)]
pub struct KgDataset {
    pub vocab: Vocabulary,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    filter: FilterIndex,
}

impl KgDataset {
    /// Assembles a dataset from already-encoded splits. Ids must be in range
    /// of `vocab`.
    pub fn from_encoded(
        vocab: Vocabulary,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        for t in train.iter().chain(&valid).chain(&test) {
            check_range("entity", t.head, vocab.num_entities())?;
            check_range("entity", t.tail, vocab.num_entities())?;
            check_range("relation", t.relation, vocab.num_relations())?;
        }
        let filter = FilterIndex::from_splits([&train[..], &valid[..], &test[..]]);
        Ok(Self {
            vocab,
            train,
            valid,
            test,
            filter,
        })
    }

    pub fn split(&self, split: Split) -> &[Triple] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn filter_index(&self) -> &FilterIndex {
        &self.filter
    }

    /// True iff `t` is in train, valid or test.
    pub fn contains(&self, t: &Triple) -> bool {
        self.filter.contains(t)
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    /// Writes the vocabulary and the encoded splits (`train.tsv`, `valid.tsv`,
    /// `test.tsv`, each line `head\trelation\ttail` as integer ids).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        self.vocab.save(dir)?;
        for split in [Split::Train, Split::Valid, Split::Test] {
            write_encoded(&encoded_path(dir, split), self.split(split))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let vocab = Vocabulary::load(dir)?;
        let train = read_encoded(&encoded_path(dir, Split::Train))?;
        let valid = read_encoded(&encoded_path(dir, Split::Valid))?;
        let test = read_encoded(&encoded_path(dir, Split::Test))?;
        Self::from_encoded(vocab, train, valid, test)
    }
}

fn check_range(kind: &'static str, index: usize, len: usize) -> Result<()> {
    if index >= len {
        return Err(Error::IndexOutOfRange { kind, index, len });
    }
    Ok(())
}

fn encoded_path(dir: &Path, split: Split) -> PathBuf {
    dir.join(format!("{split}.tsv"))
}

fn write_encoded(path: &Path, triples: &[Triple]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for t in triples {
        writeln!(w, "{}\t{}\t{}", t.head, t.relation, t.tail).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn read_encoded(path: &Path) -> Result<Vec<Triple>> {
    let raw = parse_triples(path, ColumnOrder::Hrt)?;
    let parse = |line: usize, s: &str| {
        s.parse::<usize>().map_err(|_| Error::BadId {
            path: path.to_path_buf(),
            line,
            value: s.to_string(),
        })
    };
    raw.iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(Triple::new(
                parse(i + 1, &r.head)?,
                parse(i + 1, &r.tail)?,
                parse(i + 1, &r.relation)?,
            ))
        })
        .collect()
}

/// Encodes the three raw splits into a dataset.
///
/// Names first seen in validation or test are admitted, with a warning,
/// since their embeddings are never trained.
pub fn build_dataset(train: &[RawTriple], valid: &[RawTriple], test: &[RawTriple]) -> KgDataset {
    let mut vocab = Vocabulary::new();
    let encode = |vocab: &mut Vocabulary, raws: &[RawTriple]| -> Vec<Triple> {
        raws.iter()
            .map(|r| {
                let h = vocab.add_entity(&r.head);
                let rel = vocab.add_relation(&r.relation);
                let t = vocab.add_entity(&r.tail);
                Triple::new(h, t, rel)
            })
            .collect()
    };
    let train = encode(&mut vocab, train);
    let (seen_entities, seen_relations) = (vocab.num_entities(), vocab.num_relations());
    let valid = encode(&mut vocab, valid);
    let test = encode(&mut vocab, test);

    let unseen_entities = vocab.num_entities() - seen_entities;
    let unseen_relations = vocab.num_relations() - seen_relations;
    if unseen_entities > 0 || unseen_relations > 0 {
        log::warn!(
            "{unseen_entities} entities and {unseen_relations} relations appear only in \
             validation/test; their embeddings stay at initialization"
        );
    }

    let filter = FilterIndex::from_splits([&train[..], &valid[..], &test[..]]);
    KgDataset {
        vocab,
        train,
        valid,
        test,
        filter,
    }
}
