//! The `gil` command line: a file-backed domain with one subcommand per
//! library capability.
//!
//! The domain lives in a single canonical text file (`--domain`, or
//! `$GIL_DOMAIN`, or `domain.gilt`). Every command loads it, operates
//! through the ordinary library calls, and saves it back with an atomic
//! write-then-rename, so a crash mid-save leaves the previous file intact.
//! Mutating commands take a `<file>.lock` lock so only one process writes
//! at a time; `serve` runs read-only and re-reads the file when it changes.
//!
//! Ids print and parse in their canonical rendered form everywhere. Where a
//! document argument is expected, a constant label (`Unit`, `ActorKey`,
//! `int:3`, …) is accepted too and resolves to its derived id.
//!
//! Exit codes: 0 success, 1 domain errors, 2 usage errors.

use crate::constants::{constant_id, NAMED_LABELS};
use crate::error::{GilError, Result};
use crate::micromodel::BUILTIN_CHECKS;
use crate::model::{DocumentId, Payload};
use crate::revision::RevisionContext;
use crate::store::Domain;
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, SystemTime};

#[derive(Parser)]
#[command(
    name = "gil",
    version,
    about = "append-only, immutable knowledge-graph store"
)]
struct Cli {
    /// Domain file (default: $GIL_DOMAIN, then domain.gilt)
    #[arg(long, global = true)]
    domain: Option<PathBuf>,

    /// Acting identity for revisions and observations
    #[arg(long, global = true, default_value = "local")]
    actor: String,

    /// Place recorded in revision contexts
    #[arg(long, global = true, default_value = "cli")]
    place: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a fresh domain file holding the bootstrap constants
    Init,
    /// Store a new document with the given payload; prints its id
    Add {
        kind: PayloadKindArg,
        /// Payload value (negative numbers welcome)
        #[arg(allow_hyphen_values = true)]
        value: Option<String>,
    },
    /// Bind key -> value in the owner's dictionary (write-once)
    Put {
        owner: String,
        key: String,
        value: String,
    },
    /// Append a value to the owner's list; prints the index
    Append { owner: String, value: String },
    /// Add a member to the owner's set
    Sadd { owner: String, member: String },
    /// Assert one instance of an n-ary relation; prints the instance id
    Relate {
        marker: String,
        args: Vec<String>,
    },
    /// Print a document's payload, label, and container contents
    Show { id: String },
    /// Print the document's structure as an indented tree
    Tree { id: String },
    /// Print the document's revision chain, oldest first
    Curve { id: String },
    /// Mint a revised version of a document (propagates to ancestors)
    Revise {
        target: String,
        #[command(subcommand)]
        edit: ReviseEdit,
    },
    /// Pin a document (and optionally its whole revision curve) against gc
    Observe {
        id: String,
        /// Observe every version on the document's world curve
        #[arg(long)]
        curve: bool,
    },
    /// Drop an observation by its id
    Release { observation: String },
    /// Remove every document no observation can reach
    Gc,
    /// Run the built-in well-formedness checks; exit 0 iff clean
    Validate,
    /// Write the canonical text form to stdout
    Export,
    /// Replace the domain with the contents of a canonical text file
    Import { file: PathBuf },
    /// Union another canonical text file into the domain
    Merge { file: PathBuf },
    /// Print the domain content digest
    Digest,
    /// Serve the domain read-only at host:port, reloading when it changes
    Serve { endpoint: String },
    /// Pull everything a remote serve has that this domain lacks
    Pull { endpoint: String },
    /// Print the bootstrap constant manifest
    Constants,
}

#[derive(Subcommand)]
enum ReviseEdit {
    /// Replace the target's payload
    Payload {
        kind: PayloadKindArg,
        #[arg(allow_hyphen_values = true)]
        value: Option<String>,
    },
    /// Rebind one dictionary key to a new value document
    Attr { key: String, value: String },
}

#[derive(ValueEnum, Clone, Copy)]
enum PayloadKindArg {
    Empty,
    Int,
    Real,
    Complex,
    Text,
    Blob,
}

/// Entry point for the binary: real stdio, process env, process args.
pub fn run() -> i32 {
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    run_with_io(std::env::args_os(), &mut out, &mut err)
}

/// Testable entry point: everything observable flows through the writers.
pub fn run_with_io<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                0
            } else {
                let _ = write!(err, "{e}");
                2
            };
        }
    };
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn domain_path(cli: &Cli) -> PathBuf {
    cli.domain.clone().unwrap_or_else(|| {
        std::env::var_os("GIL_DOMAIN")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("domain.gilt"))
    })
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let path = domain_path(&cli);
    match cli.command {
        Command::Init => {
            let _lock = LockGuard::acquire(&path)?;
            if path.exists() {
                return Err(GilError::InvalidLabel(format!(
                    "{} already exists; refusing to overwrite",
                    path.display()
                )));
            }
            let mut d = Domain::new();
            for label in NAMED_LABELS {
                d.constant(label)?;
            }
            save(&path, &d)?;
            writeln!(out, "initialized {}", path.display())?;
            Ok(0)
        }
        Command::Add { kind, value } => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let payload = parse_payload(kind, value.as_deref())?;
            let id = d.mint_id();
            d.insert_document(id, payload)?;
            save(&path, &d)?;
            writeln!(out, "{id}")?;
            Ok(0)
        }
        Command::Put { owner, key, value } => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let owner = resolve_mut(&mut d, &owner)?;
            let key = resolve_mut(&mut d, &key)?;
            let value = resolve_mut(&mut d, &value)?;
            d.dict_put(owner, key, value)?;
            save(&path, &d)?;
            Ok(0)
        }
        Command::Append { owner, value } => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let owner = resolve_mut(&mut d, &owner)?;
            let value = resolve_mut(&mut d, &value)?;
            let index = d.list_append(owner, value)?;
            save(&path, &d)?;
            writeln!(out, "{index}")?;
            Ok(0)
        }
        Command::Sadd { owner, member } => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let owner = resolve_mut(&mut d, &owner)?;
            let member = resolve_mut(&mut d, &member)?;
            d.set_add(owner, member)?;
            save(&path, &d)?;
            Ok(0)
        }
        Command::Relate { marker, args } => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let marker = resolve_mut(&mut d, &marker)?;
            let mut ids = Vec::with_capacity(args.len());
            for a in &args {
                ids.push(resolve_mut(&mut d, a)?);
            }
            let instance = d.assert_relation(marker, &ids)?;
            save(&path, &d)?;
            writeln!(out, "{instance}")?;
            Ok(0)
        }
        Command::Show { id } => {
            let d = load(&path)?;
            let id = resolve_read(&id);
            if d.payload(id).is_none() {
                return Err(GilError::UnknownDocument { id });
            }
            writeln!(out, "{}", summary(&d, id))?;
            if let Some(label) = d.constant_table().label_of(id) {
                writeln!(out, "label {label}")?;
            }
            for (k, v) in d.dict_entries(id)? {
                writeln!(out, "dict {} -> {}", key_name(&d, k), summary(&d, v))?;
            }
            for (i, item) in d.list_items(id)?.into_iter().enumerate() {
                writeln!(out, "list {i} {}", summary(&d, item))?;
            }
            for m in d.set_members(id)? {
                writeln!(out, "set {}", summary(&d, m))?;
            }
            Ok(0)
        }
        Command::Tree { id } => {
            let d = load(&path)?;
            let id = resolve_read(&id);
            if d.payload(id).is_none() {
                return Err(GilError::UnknownDocument { id });
            }
            let mut visited = BTreeSet::new();
            render_tree(&d, id, String::new(), 0, &mut visited, out)?;
            Ok(0)
        }
        Command::Curve { id } => {
            let d = load(&path)?;
            let id = resolve_read(&id);
            for version in d.revision_chain(id)? {
                writeln!(out, "{version}")?;
            }
            Ok(0)
        }
        Command::Revise { target, edit } => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let target = resolve_read(&target);
            let actor = cli_actor(&mut d, &cli.actor)?;
            let ctx = RevisionContext {
                actor,
                time: d.now_ms(),
                place: cli.place.clone(),
            };
            let result = match edit {
                ReviseEdit::Payload { kind, value } => {
                    let payload = parse_payload(kind, value.as_deref())?;
                    d.revise_payload(target, payload, &ctx)?
                }
                ReviseEdit::Attr { key, value } => {
                    let key = resolve_mut(&mut d, &key)?;
                    let value = resolve_mut(&mut d, &value)?;
                    d.revise_attribute(target, key, value, &ctx)?
                }
            };
            save(&path, &d)?;
            writeln!(out, "record {}", result.record)?;
            for (old, new) in &result.mapping {
                writeln!(out, "{old} -> {new}")?;
            }
            Ok(0)
        }
        Command::Observe { id, curve } => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let target = resolve_read(&id);
            let actor = cli_actor(&mut d, &cli.actor)?;
            let targets = if curve {
                d.revision_chain(target)?
            } else {
                vec![target]
            };
            for t in targets {
                let obs = d.observe(actor, t)?;
                writeln!(out, "observation {} {}", obs.observation_id, t)?;
            }
            save(&path, &d)?;
            Ok(0)
        }
        Command::Release { observation } => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let obs: DocumentId = observation
                .parse()
                .map_err(|_| GilError::MalformedId(observation.clone()))?;
            d.release(obs)?;
            save(&path, &d)?;
            Ok(0)
        }
        Command::Gc => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let report = d.collect();
            save(&path, &d)?;
            writeln!(
                out,
                "collected {} documents, {} triples",
                report.documents_removed, report.triples_removed
            )?;
            Ok(0)
        }
        Command::Validate => {
            let d = load(&path)?;
            let report = d.run_checks(&BUILTIN_CHECKS)?;
            for v in &report.violations {
                writeln!(out, "{v}")?;
            }
            if report.ok() {
                writeln!(out, "ok")?;
                Ok(0)
            } else {
                Ok(1)
            }
        }
        Command::Export => {
            let d = load(&path)?;
            out.write_all(&d.export_canonical())?;
            Ok(0)
        }
        Command::Import { file } => {
            let _lock = LockGuard::acquire(&path)?;
            let bytes = std::fs::read(&file)?;
            let d = Domain::import_canonical(&bytes)?;
            save(&path, &d)?;
            writeln!(
                out,
                "imported {} documents, {} triples",
                d.document_count(),
                d.triple_count()
            )?;
            Ok(0)
        }
        Command::Merge { file } => {
            let _lock = LockGuard::acquire(&path)?;
            let local = load(&path)?;
            let bytes = std::fs::read(&file)?;
            let other = Domain::import_canonical(&bytes)?;
            let merged = local.merge(&other)?;
            save(&path, &merged)?;
            writeln!(
                out,
                "merged: {} documents, {} triples",
                merged.document_count(),
                merged.triple_count()
            )?;
            Ok(0)
        }
        Command::Digest => {
            let d = load(&path)?;
            writeln!(out, "{}", d.digest())?;
            Ok(0)
        }
        Command::Serve { endpoint } => {
            let d = load(&path)?;
            let handle = crate::sync::serve(d, &endpoint)?;
            writeln!(out, "serving {}", handle.local_addr())?;
            out.flush()?;
            let mut last = modified(&path);
            loop {
                std::thread::sleep(Duration::from_millis(200));
                let now = modified(&path);
                if now != last {
                    last = now;
                    if let Ok(fresh) = load(&path) {
                        handle.replace_snapshot(fresh);
                    }
                }
            }
        }
        Command::Pull { endpoint } => {
            let _lock = LockGuard::acquire(&path)?;
            let mut d = load(&path)?;
            let report = crate::sync::pull(&endpoint, &mut d)?;
            save(&path, &d)?;
            writeln!(
                out,
                "received {} documents, {} triples",
                report.documents_received, report.triples_received
            )?;
            writeln!(out, "remote digest {}", report.remote_digest)?;
            writeln!(out, "converged {}", report.converged)?;
            Ok(0)
        }
        Command::Constants => {
            let table;
            if path.exists() {
                let d = load(&path)?;
                table = d.constant_table().clone();
                for (label, id) in table.iter() {
                    writeln!(out, "{label} {id}")?;
                }
            } else {
                // No domain yet: the manifest is derivable from nothing,
                // which is the whole point.
                for label in NAMED_LABELS {
                    writeln!(out, "{label} {}", constant_id(label))?;
                }
            }
            Ok(0)
        }
    }
}

// ----------------------------------------------------------------------
// Domain file plumbing

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn load(path: &Path) -> Result<Domain> {
    let bytes = std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            GilError::parse(
                0,
                format!("domain file {} not found (run init first)", path.display()),
            )
        } else {
            e.into()
        }
    })?;
    Domain::import_canonical(&bytes)
}

/// Write-then-rename: readers and crashes only ever see a complete file.
fn save(path: &Path, d: &Domain) -> Result<()> {
    let tmp = sibling(path, ".tmp");
    std::fs::write(&tmp, d.export_canonical())?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn modified(path: &Path) -> Option<SystemTime> {
    std::fs::metadata(path).and_then(|m| m.modified()).ok()
}

/// Single-writer discipline for one domain file.
struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(domain_path: &Path) -> Result<LockGuard> {
        let path = sibling(domain_path, ".lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(LockGuard { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(GilError::DomainLocked {
                    path: path.display().to_string(),
                })
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

// ----------------------------------------------------------------------
// Argument handling and rendering

fn parse_payload(kind: PayloadKindArg, value: Option<&str>) -> Result<Payload> {
    let need = |v: Option<&str>| {
        v.map(str::to_string)
            .ok_or_else(|| GilError::InvalidPayload("this payload kind needs a value".into()))
    };
    Ok(match kind {
        PayloadKindArg::Empty => {
            if value.is_some() {
                return Err(GilError::InvalidPayload("empty takes no value".into()));
            }
            Payload::Empty
        }
        PayloadKindArg::Int => Payload::Integer(
            BigInt::from_str(&need(value)?)
                .map_err(|e| GilError::InvalidPayload(format!("bad integer: {e}")))?,
        ),
        PayloadKindArg::Real => Payload::Real(need(value)?),
        PayloadKindArg::Complex => {
            let v = need(value)?;
            let (re, im) = v.split_once(',').ok_or_else(|| {
                GilError::InvalidPayload("complex wants <real>,<imaginary>".into())
            })?;
            Payload::Complex(re.to_string(), im.to_string())
        }
        PayloadKindArg::Text => Payload::Text(need(value)?),
        PayloadKindArg::Blob => Payload::Blob(
            B64.decode(need(value)?)
                .map_err(|e| GilError::InvalidPayload(format!("bad base64: {e}")))?,
        ),
    })
}

/// An id, or a constant label resolved without touching the domain.
fn resolve_read(token: &str) -> DocumentId {
    token.parse().unwrap_or_else(|_| constant_id(token))
}

/// An id, or a constant label materialized into the domain.
fn resolve_mut(d: &mut Domain, token: &str) -> Result<DocumentId> {
    match token.parse() {
        Ok(id) => Ok(id),
        Err(_) => d.constant(token),
    }
}

/// The actor document named by --actor, registered on first use.
fn cli_actor(d: &mut Domain, name: &str) -> Result<DocumentId> {
    for rec in d.actors() {
        if rec.attributes.get("name").map(String::as_str) == Some(name) {
            return Ok(rec.actor_id);
        }
    }
    Ok(d
        .register_actor(std::collections::BTreeMap::from([(
            "name".to_string(),
            name.to_string(),
        )]))?
        .actor_id)
}

fn payload_brief(p: &Payload) -> String {
    match p {
        Payload::Empty => "E".into(),
        Payload::Integer(i) => format!("I {i}"),
        Payload::Real(s) => format!("R {s}"),
        Payload::Complex(re, im) => format!("C {re},{im}"),
        Payload::Text(s) => format!("T {s:?}"),
        Payload::Blob(b) => format!("B {} bytes", b.len()),
    }
}

fn summary(d: &Domain, id: DocumentId) -> String {
    match d.payload(id) {
        Some(p) => format!("{id} {}", payload_brief(p)),
        None => format!("{id} ?"),
    }
}

/// Keys print as their constant label or text where available; raw ids are
/// a last resort.
fn key_name(d: &Domain, key: DocumentId) -> String {
    if let Some(label) = d.constant_table().label_of(key) {
        return label.to_string();
    }
    match d.payload(key) {
        Some(Payload::Text(s)) => format!("{s:?}"),
        _ => key.to_string(),
    }
}

fn render_tree(
    d: &Domain,
    id: DocumentId,
    role: String,
    depth: usize,
    visited: &mut BTreeSet<DocumentId>,
    out: &mut dyn Write,
) -> Result<()> {
    let pad = "  ".repeat(depth);
    if !visited.insert(id) {
        writeln!(out, "{pad}{role}{} (already shown)", summary(d, id))?;
        return Ok(());
    }
    writeln!(out, "{pad}{role}{}", summary(d, id))?;
    match d.dict_entries(id) {
        Ok(entries) => {
            for (k, v) in entries {
                render_tree(d, v, format!("{} = ", key_name(d, k)), depth + 1, visited, out)?;
            }
        }
        Err(e) => writeln!(out, "{pad}  (malformed dictionary: {e})")?,
    }
    match d.list_items(id) {
        Ok(items) => {
            for (i, item) in items.into_iter().enumerate() {
                render_tree(d, item, format!("[{i}] "), depth + 1, visited, out)?;
            }
        }
        Err(e) => writeln!(out, "{pad}  (malformed list: {e})")?,
    }
    match d.set_members(id) {
        Ok(members) => {
            for m in members {
                render_tree(d, m, "* ".to_string(), depth + 1, visited, out)?;
            }
        }
        Err(e) => writeln!(out, "{pad}  (malformed set: {e})")?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn gil(dir: &TempDir, args: &[&str]) -> (i32, String, String) {
        let domain = dir.path().join("d.gilt");
        gil_at(&domain, args)
    }

    fn gil_at(domain: &Path, args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let domain_str = domain.to_str().unwrap().to_string();
        let mut argv = vec!["gil", "--domain", &domain_str];
        argv.extend(args);
        let code = run_with_io(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    fn first_line(s: &str) -> &str {
        s.lines().next().unwrap_or("")
    }

    #[test]
    fn init_is_refused_twice_and_digest_is_reproducible() {
        let dir = TempDir::new().unwrap();
        let (code, _, _) = gil(&dir, &["init"]);
        assert_eq!(code, 0);
        let (code, _, err) = gil(&dir, &["init"]);
        assert_eq!(code, 1);
        assert!(err.contains("already exists"));

        let (_, digest_a, _) = gil(&dir, &["digest"]);
        let dir_b = TempDir::new().unwrap();
        gil(&dir_b, &["init"]);
        let (_, digest_b, _) = gil(&dir_b, &["digest"]);
        // Constants-only domains have no minted ids, so two inits agree.
        assert_eq!(digest_a, digest_b);
    }

    #[test]
    fn add_show_and_containers_round_trip() {
        let dir = TempDir::new().unwrap();
        gil(&dir, &["init"]);
        let (code, out, _) = gil(&dir, &["add", "text", "hello"]);
        assert_eq!(code, 0);
        let id = first_line(&out).to_string();

        let (code, out, _) = gil(&dir, &["show", &id]);
        assert_eq!(code, 0);
        assert!(out.contains("T \"hello\""));

        let (_, key, _) = gil(&dir, &["add", "text", "title"]);
        let (_, val, _) = gil(&dir, &["add", "int", "-42"]);
        let key = first_line(&key);
        let val = first_line(&val);
        let (code, _, _) = gil(&dir, &["put", &id, key, val]);
        assert_eq!(code, 0);
        let (code, _, err) = gil(&dir, &["put", &id, key, val]);
        assert_eq!(code, 1, "write-once key: {err}");

        let (_, out, _) = gil(&dir, &["show", &id]);
        assert!(out.contains("dict \"title\" -> "));
        assert!(out.contains("I -42"));

        let (code, idx, _) = gil(&dir, &["append", &id, val]);
        assert_eq!(code, 0);
        assert_eq!(first_line(&idx), "0");
        let (_, out, _) = gil(&dir, &["tree", &id]);
        assert!(out.contains("[0] "));
    }

    #[test]
    fn labels_resolve_as_documents() {
        let dir = TempDir::new().unwrap();
        gil(&dir, &["init"]);
        let (_, owner, _) = gil(&dir, &["add", "empty"]);
        let owner = first_line(&owner);
        // Unit is a label, not an id; put should resolve and materialize it.
        let (code, _, err) = gil(&dir, &["put", owner, "ActorKey", "Unit"]);
        assert_eq!(code, 0, "{err}");
        let (_, out, _) = gil(&dir, &["show", owner]);
        assert!(out.contains("dict ActorKey -> "));
    }

    #[test]
    fn revise_and_curve_flow() {
        let dir = TempDir::new().unwrap();
        gil(&dir, &["init"]);
        let (_, id, _) = gil(&dir, &["add", "text", "v1"]);
        let id = first_line(&id).to_string();
        let (code, out, err) = gil(&dir, &["revise", &id, "payload", "text", "v2"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("record "));
        let new_id = out
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{id} -> ")))
            .unwrap()
            .to_string();

        let (code, curve, _) = gil(&dir, &["curve", &new_id]);
        assert_eq!(code, 0);
        let versions: Vec<&str> = curve.lines().collect();
        assert_eq!(versions, vec![id.as_str(), new_id.as_str()]);

        let (_, shown, _) = gil(&dir, &["show", &new_id]);
        assert!(shown.contains("T \"v2\""));
    }

    #[test]
    fn observe_gc_release_cycle() {
        let dir = TempDir::new().unwrap();
        gil(&dir, &["init"]);
        let (_, keep, _) = gil(&dir, &["add", "text", "keep"]);
        let (_, drop_, _) = gil(&dir, &["add", "text", "drop"]);
        let keep = first_line(&keep).to_string();
        let drop_ = first_line(&drop_).to_string();

        let (code, obs_out, _) = gil(&dir, &["observe", &keep]);
        assert_eq!(code, 0);
        let obs = obs_out
            .lines()
            .next()
            .unwrap()
            .split_whitespace()
            .nth(1)
            .unwrap()
            .to_string();

        let (code, gc_out, _) = gil(&dir, &["gc"]);
        assert_eq!(code, 0);
        assert!(gc_out.starts_with("collected "));
        let (code, _, _) = gil(&dir, &["show", &keep]);
        assert_eq!(code, 0);
        let (code, _, _) = gil(&dir, &["show", &drop_]);
        assert_eq!(code, 1);

        let (code, _, _) = gil(&dir, &["release", &obs]);
        assert_eq!(code, 0);
        gil(&dir, &["gc"]);
        let (code, _, _) = gil(&dir, &["show", &keep]);
        assert_eq!(code, 1);
    }

    #[test]
    fn validate_export_import_merge_digest() {
        let dir = TempDir::new().unwrap();
        gil(&dir, &["init"]);
        gil(&dir, &["add", "text", "content"]);
        let (code, out, _) = gil(&dir, &["validate"]);
        assert_eq!(code, 0);
        assert_eq!(first_line(&out), "ok");

        let (_, exported, _) = gil(&dir, &["export"]);
        assert!(exported.starts_with("GILT 1\n"));
        let side = dir.path().join("copy.gilt");
        std::fs::write(&side, &exported).unwrap();

        let other = dir.path().join("other.gilt");
        let (code, _, _) = gil_at(&other, &["init"]);
        assert_eq!(code, 0);
        let (code, out, _) = gil_at(&other, &["merge", side.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.starts_with("merged: "));

        let (_, da, _) = gil(&dir, &["digest"]);
        let (_, db, _) = gil_at(&other, &["digest"]);
        assert_eq!(da, db); // other = init ∪ dir, and dir ⊇ init

        let third = dir.path().join("third.gilt");
        let (code, out, _) = gil_at(&third, &["import", side.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.starts_with("imported "));
        let (_, dc, _) = gil_at(&third, &["digest"]);
        assert_eq!(da, dc);
    }

    #[test]
    fn relate_prints_instance_and_survives() {
        let dir = TempDir::new().unwrap();
        gil(&dir, &["init"]);
        let (_, m, _) = gil(&dir, &["add", "empty"]);
        let (_, a, _) = gil(&dir, &["add", "empty"]);
        let (_, b, _) = gil(&dir, &["add", "empty"]);
        let (_, c, _) = gil(&dir, &["add", "empty"]);
        let (m, a, b, c) = (first_line(&m), first_line(&a), first_line(&b), first_line(&c));
        let (code, out, _) = gil(&dir, &["relate", m, a, b, c]);
        assert_eq!(code, 0);
        let instance = first_line(&out).to_string();
        let (code, shown, _) = gil(&dir, &["show", &instance]);
        assert_eq!(code, 0);
        assert!(shown.contains("dict int:0 -> "));
    }

    #[test]
    fn constants_manifest_with_and_without_domain() {
        let dir = TempDir::new().unwrap();
        let (code, bare, _) = gil(&dir, &["constants"]);
        assert_eq!(code, 0);
        assert_eq!(bare.lines().count(), NAMED_LABELS.len());
        assert!(bare.contains("Unit "));

        gil(&dir, &["init"]);
        let (_, with_domain, _) = gil(&dir, &["constants"]);
        for line in bare.lines() {
            assert!(with_domain.contains(line), "missing {line}");
        }
    }

    #[test]
    fn usage_errors_exit_2_and_domain_errors_exit_1() {
        let dir = TempDir::new().unwrap();
        let (code, _, _) = gil(&dir, &["no-such-command"]);
        assert_eq!(code, 2);
        let (code, _, err) = gil(&dir, &["digest"]);
        assert_eq!(code, 1);
        assert!(err.contains("not found"));
    }

    #[test]
    fn lock_file_blocks_writers_and_is_released() {
        let dir = TempDir::new().unwrap();
        gil(&dir, &["init"]);
        let lock = dir.path().join("d.gilt.lock");
        std::fs::write(&lock, "held\n").unwrap();
        let (code, _, err) = gil(&dir, &["add", "text", "x"]);
        assert_eq!(code, 1);
        assert!(err.contains("locked"));
        std::fs::remove_file(&lock).unwrap();
        let (code, _, _) = gil(&dir, &["add", "text", "x"]);
        assert_eq!(code, 0);
        assert!(!lock.exists(), "lock released after the command");
    }

    #[test]
    fn crash_between_write_and_rename_leaves_previous_file() {
        let dir = TempDir::new().unwrap();
        gil(&dir, &["init"]);
        let path = dir.path().join("d.gilt");
        let before = std::fs::read(&path).unwrap();
        // A stale tmp from a crashed writer must not affect the domain.
        std::fs::write(dir.path().join("d.gilt.tmp"), b"half-written garbage").unwrap();
        let (code, _, _) = gil(&dir, &["digest"]);
        assert_eq!(code, 0);
        assert_eq!(std::fs::read(&path).unwrap(), before);
    }

    #[test]
    fn env_var_provides_default_domain_path() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("env.gilt");
        std::env::set_var("GIL_DOMAIN", &path);
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with_io(["gil", "init"], &mut out, &mut err);
        std::env::remove_var("GIL_DOMAIN");
        assert_eq!(code, 0);
        assert!(path.exists());
    }
}
