//! Pull-based reconciliation between domain nodes over a byte stream.
//!
//! The protocol is deliberately naive — full id enumeration, no Merkle or
//! Bloom filtering — because permanence makes reconciliation trivial: both
//! sides only ever grow, so the difference is a plain set difference.
//!
//! Wire protocol (UTF-8 lines, LF):
//!
//! ```text
//! C: HELLO 1                 S: HELLO 1
//! C: IDS                     S: D <id> <sha256 of D-line> ...
//!                               TH <sha256 of T-line> ... / END
//! C: WANT
//!    D <id>
//!    T <marker> <first> <second>
//!    TH <sha256 of T-line>      (request a triple by its digest)
//!    END                     S: matching GILT D/T lines, sorted / END
//! C: BYE                     (server closes)
//! ```
//!
//! Any malformed verb earns `ERR <token>` and the connection stays usable.
//! `TH` request lines exist because a puller knows missing triples only by
//! digest (that is what IDS advertises), never by name. The digest on each
//! IDS `D` line is what lets a puller notice a shared id whose payloads
//! disagree — corruption — before applying anything, and to reconstruct
//! the remote's digest without a second transfer.
//!
//! A pull stages everything into a copy of the local domain and swaps
//! atomically, so a corrupt transfer (PayloadConflict mid-stream) cannot
//! half-apply. The served domain is read-only to the network: snapshots are
//! taken per request, and bidirectional sync is simply two pulls.

use crate::error::{GilError, Result};
use crate::interchange::{document_line, parse_document_line, parse_triple_line, triple_line, DomainDigest};
use crate::model::{DocumentId, Payload, Triple};
use crate::store::Domain;
use sha2::{Digest as _, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};
use std::thread::{self, JoinHandle};
use std::time::Duration;

const PROTOCOL_HELLO: &str = "HELLO 1";
const CLIENT_TIMEOUT: Duration = Duration::from_secs(10);
const SERVER_READ_TIMEOUT: Duration = Duration::from_secs(30);

/// What one pull accomplished.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncReport {
    pub documents_received: usize,
    pub triples_received: usize,
    pub remote_digest: DomainDigest,
    /// True iff the local digest equals the remote digest after application.
    pub converged: bool,
}

fn hex_sha256(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out: [u8; 32] = hasher.finalize().into();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hex SHA-256 of the canonical triple line — how IDS advertises triples.
pub fn triple_hash(t: &Triple) -> String {
    hex_sha256(triple_line(t).as_bytes())
}

/// Hex SHA-256 of the canonical document line — how IDS advertises payload
/// content alongside each id.
pub fn document_hash(id: DocumentId, payload: &Payload) -> String {
    hex_sha256(document_line(id, payload).as_bytes())
}

fn is_hex_digest(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

/// A running read-only replication service.
///
/// Shuts down on drop; `replace_snapshot` publishes a newer domain state to
/// future requests without interrupting connected clients.
pub struct ServerHandle {
    snapshot: Arc<RwLock<Arc<Domain>>>,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
    local_addr: SocketAddr,
}

impl ServerHandle {
    /// The bound address (useful when serving on port 0).
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Publish a new snapshot; requests already in flight keep the old one.
    pub fn replace_snapshot(&self, domain: Domain) {
        *self.snapshot.write().expect("snapshot lock poisoned") = Arc::new(domain);
    }

    /// Stop accepting connections and join the accept loop.
    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop_now();
    }
}

/// Serve a domain snapshot at `endpoint` (e.g. `127.0.0.1:4114`).
/// Never mutates what it serves; each request reads a consistent snapshot.
pub fn serve(domain: Domain, endpoint: &str) -> Result<ServerHandle> {
    let listener = TcpListener::bind(endpoint).map_err(|source| GilError::BindFailure {
        endpoint: endpoint.to_string(),
        source,
    })?;
    let local_addr = listener.local_addr().map_err(|source| GilError::BindFailure {
        endpoint: endpoint.to_string(),
        source,
    })?;
    listener
        .set_nonblocking(true)
        .map_err(|source| GilError::BindFailure {
            endpoint: endpoint.to_string(),
            source,
        })?;

    let snapshot = Arc::new(RwLock::new(Arc::new(domain)));
    let stop = Arc::new(AtomicBool::new(false));

    let accept_snapshot = Arc::clone(&snapshot);
    let accept_stop = Arc::clone(&stop);
    let accept_thread = thread::spawn(move || {
        while !accept_stop.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, _)) => {
                    let conn_snapshot = Arc::clone(&accept_snapshot);
                    thread::spawn(move || {
                        let _ = handle_connection(stream, conn_snapshot);
                    });
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    thread::sleep(Duration::from_millis(5));
                }
                Err(_) => break,
            }
        }
    });

    Ok(ServerHandle {
        snapshot,
        stop,
        accept_thread: Some(accept_thread),
        local_addr,
    })
}

fn read_line(reader: &mut impl BufRead) -> std::io::Result<Option<String>> {
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(None); // EOF
    }
    while line.ends_with('\n') || line.ends_with('\r') {
        line.pop();
    }
    Ok(Some(line))
}

fn handle_connection(stream: TcpStream, snapshot: Arc<RwLock<Arc<Domain>>>) -> std::io::Result<()> {
    stream.set_read_timeout(Some(SERVER_READ_TIMEOUT))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);

    while let Some(line) = read_line(&mut reader)? {
        match line.as_str() {
            PROTOCOL_HELLO => writeln!(writer, "{PROTOCOL_HELLO}")?,
            "IDS" => {
                let snap = snapshot.read().expect("snapshot lock poisoned").clone();
                for (id, payload) in snap.documents() {
                    writeln!(writer, "D {id} {}", document_hash(id, payload))?;
                }
                for t in snap.triples() {
                    writeln!(writer, "TH {}", triple_hash(t))?;
                }
                writeln!(writer, "END")?;
            }
            "WANT" => {
                let snap = snapshot.read().expect("snapshot lock poisoned").clone();
                match collect_want_body(&mut reader)? {
                    None => writeln!(writer, "ERR bad-request")?,
                    Some(requests) => {
                        let (docs, triples) = resolve_requests(&snap, &requests);
                        for (id, payload) in docs {
                            writeln!(writer, "{}", document_line(id, &payload))?;
                        }
                        for t in triples {
                            writeln!(writer, "{}", triple_line(&t))?;
                        }
                        writeln!(writer, "END")?;
                    }
                }
            }
            "BYE" => break,
            h if h.starts_with("HELLO") => writeln!(writer, "ERR unsupported-version")?,
            _ => writeln!(writer, "ERR unknown-verb")?,
        }
        writer.flush()?;
    }
    Ok(())
}

enum WantItem {
    Doc(DocumentId),
    Triple(Triple),
    TripleHash(String),
}

/// Read a WANT body up to END. `None` means a malformed request line was
/// seen (the rest of the body is still drained so the connection survives).
fn collect_want_body(reader: &mut impl BufRead) -> std::io::Result<Option<Vec<WantItem>>> {
    let mut items = Vec::new();
    let mut ok = true;
    while let Some(line) = read_line(reader)? {
        if line == "END" {
            return Ok(if ok { Some(items) } else { None });
        }
        if !ok {
            continue;
        }
        if let Some(rest) = line.strip_prefix("TH ") {
            if is_hex_digest(rest) {
                items.push(WantItem::TripleHash(rest.to_string()));
            } else {
                ok = false;
            }
        } else if line.starts_with("D ") {
            match line[2..].parse::<DocumentId>() {
                Ok(id) => items.push(WantItem::Doc(id)),
                Err(_) => ok = false,
            }
        } else if line.starts_with("T ") {
            match parse_triple_line(&line, 0) {
                Ok(t) => items.push(WantItem::Triple(t)),
                Err(_) => ok = false,
            }
        } else {
            ok = false;
        }
    }
    Ok(None) // EOF inside a body
}

/// Match requests against a snapshot; unknown items are silently absent so
/// the puller can detect an incomplete transfer itself.
fn resolve_requests(
    snap: &Domain,
    requests: &[WantItem],
) -> (BTreeMap<DocumentId, Payload>, BTreeSet<Triple>) {
    let mut docs = BTreeMap::new();
    let mut triples = BTreeSet::new();
    let mut by_hash: Option<BTreeMap<String, Triple>> = None;
    for item in requests {
        match item {
            WantItem::Doc(id) => {
                if let Some(p) = snap.payload(*id) {
                    docs.insert(*id, p.clone());
                }
            }
            WantItem::Triple(t) => {
                if snap.contains_triple(t) {
                    triples.insert(*t);
                }
            }
            WantItem::TripleHash(h) => {
                let index = by_hash.get_or_insert_with(|| {
                    snap.triples().map(|t| (triple_hash(t), *t)).collect()
                });
                if let Some(t) = index.get(h) {
                    triples.insert(*t);
                }
            }
        }
    }
    (docs, triples)
}

// ----------------------------------------------------------------------
// Client side

struct Connection {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    endpoint: String,
}

impl Connection {
    fn open(endpoint: &str) -> Result<Connection> {
        let err = |source| GilError::ConnectionError {
            endpoint: endpoint.to_string(),
            source,
        };
        let stream = TcpStream::connect(endpoint).map_err(err)?;
        stream.set_read_timeout(Some(CLIENT_TIMEOUT)).map_err(err)?;
        stream.set_write_timeout(Some(CLIENT_TIMEOUT)).map_err(err)?;
        let reader = BufReader::new(stream.try_clone().map_err(err)?);
        Ok(Connection {
            reader,
            writer: BufWriter::new(stream),
            endpoint: endpoint.to_string(),
        })
    }

    fn send(&mut self, line: &str) -> Result<()> {
        let err = |source| GilError::ConnectionError {
            endpoint: self.endpoint.clone(),
            source,
        };
        writeln!(self.writer, "{line}").map_err(err)?;
        self.writer.flush().map_err(err)
    }

    fn recv(&mut self) -> Result<String> {
        match read_line(&mut self.reader) {
            Ok(Some(line)) => {
                if let Some(token) = line.strip_prefix("ERR ") {
                    Err(GilError::protocol(format!("server error: {token}")))
                } else {
                    Ok(line)
                }
            }
            Ok(None) => Err(GilError::protocol("connection closed mid-conversation")),
            Err(source) => Err(GilError::ConnectionError {
                endpoint: self.endpoint.clone(),
                source,
            }),
        }
    }
}

/// Pull everything the remote has that we lack, staged then applied
/// atomically. Afterwards the remote's graph content is a subset of ours.
pub fn pull(endpoint: &str, local: &mut Domain) -> Result<SyncReport> {
    let mut conn = Connection::open(endpoint)?;
    conn.send(PROTOCOL_HELLO)?;
    let hello = conn.recv()?;
    if hello != PROTOCOL_HELLO {
        return Err(GilError::protocol(format!("unexpected greeting {hello:?}")));
    }

    // Inventory: remote's document ids (with payload digests) and triple
    // digests.
    conn.send("IDS")?;
    let mut remote_docs: BTreeMap<DocumentId, String> = BTreeMap::new();
    let mut remote_hashes: BTreeSet<String> = BTreeSet::new();
    loop {
        let line = conn.recv()?;
        if line == "END" {
            break;
        } else if let Some(rest) = line.strip_prefix("D ") {
            let (id_str, hash) = rest
                .split_once(' ')
                .ok_or_else(|| GilError::protocol(format!("bad id line {line:?}")))?;
            let id: DocumentId = id_str
                .parse()
                .map_err(|_| GilError::protocol(format!("bad id line {line:?}")))?;
            if !is_hex_digest(hash) {
                return Err(GilError::protocol(format!("bad id line {line:?}")));
            }
            remote_docs.insert(id, hash.to_string());
        } else if let Some(rest) = line.strip_prefix("TH ") {
            if !is_hex_digest(rest) {
                return Err(GilError::protocol(format!("bad digest line {line:?}")));
            }
            remote_hashes.insert(rest.to_string());
        } else {
            return Err(GilError::protocol(format!("unexpected IDS line {line:?}")));
        }
    }

    // A shared id must carry the same payload on both sides; anything else
    // is corruption, caught here before a single record moves.
    let mut want_docs: Vec<DocumentId> = Vec::new();
    for (id, advertised) in &remote_docs {
        match local.payload(*id) {
            None => want_docs.push(*id),
            Some(payload) => {
                if document_hash(*id, payload) != *advertised {
                    return Err(GilError::PayloadConflict { id: *id });
                }
            }
        }
    }
    let local_triple_hashes: BTreeMap<String, Triple> =
        local.triples().map(|t| (triple_hash(t), *t)).collect();
    let want_hashes: Vec<&String> = remote_hashes
        .iter()
        .filter(|h| !local_triple_hashes.contains_key(*h))
        .collect();

    let mut received_docs: Vec<(DocumentId, Payload)> = Vec::new();
    let mut received_triples: Vec<Triple> = Vec::new();
    if !want_docs.is_empty() || !want_hashes.is_empty() {
        conn.send("WANT")?;
        for id in &want_docs {
            conn.send(&format!("D {id}"))?;
        }
        for h in &want_hashes {
            conn.send(&format!("TH {h}"))?;
        }
        conn.send("END")?;
        loop {
            let line = conn.recv()?;
            if line == "END" {
                break;
            } else if line.starts_with("D ") {
                received_docs.push(
                    parse_document_line(&line, 0)
                        .map_err(|e| GilError::protocol(format!("bad record: {e}")))?,
                );
            } else if line.starts_with("T ") {
                received_triples.push(
                    parse_triple_line(&line, 0)
                        .map_err(|e| GilError::protocol(format!("bad record: {e}")))?,
                );
            } else {
                return Err(GilError::protocol(format!("unexpected record {line:?}")));
            }
        }
    }
    let _ = conn.send("BYE");

    // Stage onto a copy; only a fully verified transfer replaces the local
    // domain, so corruption detected here cannot half-apply.
    let mut staging = local.clone();
    for (id, payload) in &received_docs {
        match remote_docs.get(id) {
            Some(advertised) if document_hash(*id, payload) == *advertised => {}
            _ => {
                return Err(GilError::protocol(format!(
                    "received document {id} does not match its advertised digest"
                )))
            }
        }
        staging.insert_document(*id, payload.clone())?;
    }
    for t in &received_triples {
        staging.insert_triple(*t).map_err(|e| match e {
            GilError::DanglingReference { id } => {
                GilError::protocol(format!("remote triple references unknown document {id}"))
            }
            other => other,
        })?;
    }

    let missing_docs = want_docs
        .iter()
        .filter(|id| !staging.contains_document(**id))
        .count();
    let staged_hashes: BTreeSet<String> = received_triples.iter().map(triple_hash).collect();
    let missing_triples = want_hashes
        .iter()
        .filter(|h| !staged_hashes.contains(**h))
        .count();
    if missing_docs + missing_triples > 0 {
        return Err(GilError::IncompleteTransfer {
            missing: missing_docs + missing_triples,
        });
    }

    // Reconstruct the remote's canonical graph section to know its digest:
    // every remote document and triple is now present locally by
    // construction, and payload equality is enforced, so our rendering of
    // its lines is byte-exact.
    let mut triple_lines_by_hash: BTreeMap<String, String> = local_triple_hashes
        .iter()
        .map(|(h, t)| (h.clone(), triple_line(t)))
        .collect();
    for t in &received_triples {
        triple_lines_by_hash.insert(triple_hash(t), triple_line(t));
    }
    let mut hasher = Sha256::new();
    for id in remote_docs.keys() {
        let payload = staging
            .payload(*id)
            .expect("verified above: all remote docs staged");
        hasher.update(document_line(*id, payload).as_bytes());
        hasher.update(b"\n");
    }
    let mut remote_triple_lines: Vec<&String> = remote_hashes
        .iter()
        .map(|h| triple_lines_by_hash.get(h).expect("verified above: all remote triples staged"))
        .collect();
    remote_triple_lines.sort();
    for line in remote_triple_lines {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    let remote_digest = DomainDigest(hasher.finalize().into());

    let report = SyncReport {
        documents_received: received_docs.len(),
        triples_received: received_triples.len(),
        remote_digest,
        converged: staging.digest() == remote_digest,
    };
    *local = staging;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Payload;
    use num_bigint::BigInt;

    fn demo_domain(seed: u64, extra: usize) -> Domain {
        let mut d = Domain::seeded(seed);
        let root = d.mint_id();
        d.insert_document(root, Payload::Text(format!("root {seed}")))
            .unwrap();
        for i in 0..extra {
            let id = d.mint_id();
            d.insert_document(id, Payload::Integer(BigInt::from(i)))
                .unwrap();
            d.set_add(root, id).unwrap();
        }
        d
    }

    fn raw_client(addr: SocketAddr) -> (BufReader<TcpStream>, BufWriter<TcpStream>) {
        let stream = TcpStream::connect(addr).unwrap();
        stream
            .set_read_timeout(Some(Duration::from_secs(5)))
            .unwrap();
        (
            BufReader::new(stream.try_clone().unwrap()),
            BufWriter::new(stream),
        )
    }

    #[test]
    fn hello_ids_and_unknown_verb() {
        let d = demo_domain(1, 2);
        let doc_count = d.document_count();
        let triple_count = d.triple_count();
        let server = serve(d, "127.0.0.1:0").unwrap();
        let (mut r, mut w) = raw_client(server.local_addr());

        writeln!(w, "HELLO 1").unwrap();
        w.flush().unwrap();
        assert_eq!(read_line(&mut r).unwrap().unwrap(), "HELLO 1");

        // Unknown verbs do not kill the connection.
        writeln!(w, "FROB").unwrap();
        w.flush().unwrap();
        assert_eq!(read_line(&mut r).unwrap().unwrap(), "ERR unknown-verb");

        writeln!(w, "HELLO 9").unwrap();
        w.flush().unwrap();
        assert_eq!(
            read_line(&mut r).unwrap().unwrap(),
            "ERR unsupported-version"
        );

        writeln!(w, "IDS").unwrap();
        w.flush().unwrap();
        let mut d_lines = 0;
        let mut th_lines = 0;
        loop {
            let line = read_line(&mut r).unwrap().unwrap();
            if line == "END" {
                break;
            } else if line.starts_with("D ") {
                d_lines += 1;
            } else if line.starts_with("TH ") {
                th_lines += 1;
            } else {
                panic!("unexpected line {line:?}");
            }
        }
        assert_eq!((d_lines, th_lines), (doc_count, triple_count));
        server.shutdown();
    }

    #[test]
    fn pull_reaches_convergence_and_is_idempotent() {
        let mut a = demo_domain(1, 3);
        let b = demo_domain(2, 5);
        let b_digest = b.digest();
        // The transfer is exactly the set difference; the domains share the
        // birth-0 constants their containers rely on.
        let missing_docs = b
            .documents()
            .filter(|(id, _)| !a.contains_document(*id))
            .count();
        let missing_triples = b.triples().filter(|t| !a.contains_triple(t)).count();

        let server = serve(b.clone(), "127.0.0.1:0").unwrap();
        let endpoint = server.local_addr().to_string();

        let report = pull(&endpoint, &mut a).unwrap();
        assert_eq!(report.documents_received, missing_docs);
        assert_eq!(report.triples_received, missing_triples);
        assert_eq!(report.remote_digest, b_digest);
        assert!(!report.converged); // local kept its own extra content
        assert_eq!(a.digest(), a.merge(&b).unwrap().digest());

        // Remote content is now a subset: a second pull moves nothing.
        let again = pull(&endpoint, &mut a).unwrap();
        assert_eq!(again.documents_received, 0);
        assert_eq!(again.triples_received, 0);

        // The other direction converges the pair.
        let server2 = serve(a.clone(), "127.0.0.1:0").unwrap();
        let mut b2 = b;
        let back = pull(&server2.local_addr().to_string(), &mut b2).unwrap();
        assert!(back.converged);
        assert_eq!(b2.digest(), a.digest());

        server.shutdown();
        server2.shutdown();
    }

    #[test]
    fn pull_from_identical_remote_reports_convergence() {
        let d = demo_domain(4, 2);
        let server = serve(d.clone(), "127.0.0.1:0").unwrap();
        let mut local = d.clone();
        let report = pull(&server.local_addr().to_string(), &mut local).unwrap();
        assert_eq!(report.documents_received, 0);
        assert_eq!(report.triples_received, 0);
        assert!(report.converged);
        assert_eq!(report.remote_digest, d.digest());
    }

    #[test]
    fn corrupt_transfer_aborts_without_touching_local() {
        // Same minted id, different payloads: the staging step must refuse.
        let mut x = Domain::seeded(9);
        let mut y = Domain::seeded(9);
        let id = x.mint_id();
        assert_eq!(id, y.mint_id());
        x.insert_document(id, Payload::Text("ours".into())).unwrap();
        y.insert_document(id, Payload::Text("theirs".into())).unwrap();

        let before = x.digest();
        let server = serve(y, "127.0.0.1:0").unwrap();
        let err = pull(&server.local_addr().to_string(), &mut x).unwrap_err();
        assert!(matches!(err, GilError::PayloadConflict { .. }));
        assert_eq!(x.digest(), before);
    }

    #[test]
    fn served_domain_is_never_mutated() {
        let d = demo_domain(5, 3);
        let digest = d.digest();
        let audit_len = d.audit().len();
        let server = serve(d, "127.0.0.1:0").unwrap();
        let mut sink = Domain::new();
        pull(&server.local_addr().to_string(), &mut sink).unwrap();
        let snap = server.snapshot.read().unwrap().clone();
        assert_eq!(snap.digest(), digest);
        assert_eq!(snap.audit().len(), audit_len);
    }

    #[test]
    fn snapshot_replacement_serves_new_content() {
        let server = serve(demo_domain(6, 0), "127.0.0.1:0").unwrap();
        let endpoint = server.local_addr().to_string();
        let mut sink = Domain::new();
        let first = pull(&endpoint, &mut sink).unwrap();

        let bigger = demo_domain(6, 4);
        server.replace_snapshot(bigger.clone());
        let second = pull(&endpoint, &mut sink).unwrap();
        assert!(second.documents_received > 0);
        assert_eq!(sink.digest(), bigger.digest());
        assert!(first.documents_received < bigger.document_count());
    }

    #[test]
    fn bind_failure_is_reported() {
        assert!(matches!(
            serve(Domain::new(), "256.256.256.256:99999"),
            Err(GilError::BindFailure { .. })
        ));
        assert!(matches!(
            pull("127.0.0.1:1", &mut Domain::new()),
            Err(GilError::ConnectionError { .. })
        ));
    }
}
