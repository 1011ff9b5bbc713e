//! Wire-protocol conformance, exercised with a bare TCP client so the
//! grammar itself is pinned: line-oriented, UTF-8, LF; HELLO/IDS/WANT/BYE
//! verbs; `ERR <token>` replies that leave the connection usable.

mod common;

use common::random_domain;
use gil::{document_line, serve, triple_line, Domain, Payload};
use sha2::{Digest, Sha256};
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;

struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl Client {
    fn connect(addr: &str) -> Client {
        let stream = TcpStream::connect(addr).expect("connect");
        Client {
            reader: BufReader::new(stream.try_clone().expect("clone")),
            writer: stream,
        }
    }

    fn send(&mut self, line: &str) {
        writeln!(self.writer, "{line}").expect("send");
        self.writer.flush().expect("flush");
    }

    /// Next line without its terminator; None on clean EOF.
    fn recv(&mut self) -> Option<String> {
        let mut line = String::new();
        if self.reader.read_line(&mut line).expect("recv") == 0 {
            return None;
        }
        while line.ends_with('\n') || line.ends_with('\r') {
            line.pop();
        }
        Some(line)
    }

    fn recv_until_end(&mut self) -> Vec<String> {
        let mut lines = Vec::new();
        loop {
            let line = self.recv().expect("stream closed before END");
            if line == "END" {
                return lines;
            }
            lines.push(line);
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn small_domain() -> Domain {
    let mut d = Domain::seeded(7001);
    let a = d.mint_id();
    d.insert_document(a, Payload::Text("left".into())).unwrap();
    let b = d.mint_id();
    d.insert_document(b, Payload::Integer(42.into())).unwrap();
    let k = d.mint_id();
    d.insert_document(k, Payload::Empty).unwrap();
    d.dict_put(a, k, b).unwrap();
    d
}

#[test]
fn greeting_echoes_and_unsupported_version_is_refused() {
    let server = serve(small_domain(), "127.0.0.1:0").unwrap();
    let mut c = Client::connect(&server.local_addr().to_string());

    c.send("HELLO 1");
    assert_eq!(c.recv().as_deref(), Some("HELLO 1"));

    c.send("HELLO 99");
    assert_eq!(c.recv().as_deref(), Some("ERR unsupported-version"));

    // The refusal is not fatal to the session.
    c.send("HELLO 1");
    assert_eq!(c.recv().as_deref(), Some("HELLO 1"));
    server.shutdown();
}

#[test]
fn ids_inventory_matches_export_sections() {
    let domain = small_domain();
    let export = String::from_utf8(domain.export_canonical()).unwrap();
    let server = serve(domain.clone(), "127.0.0.1:0").unwrap();
    let mut c = Client::connect(&server.local_addr().to_string());
    c.send("HELLO 1");
    c.recv();

    c.send("IDS");
    let lines = c.recv_until_end();

    // D lines first, in export (id) order, each advertising the SHA-256 of
    // the corresponding canonical document line; then one TH line per triple
    // in export order.
    let export_d: Vec<&str> = export.lines().filter(|l| l.starts_with("D ")).collect();
    let export_t: Vec<&str> = export.lines().filter(|l| l.starts_with("T ")).collect();
    let (ids_d, ids_th): (Vec<&String>, Vec<&String>) =
        lines.iter().partition(|l| l.starts_with("D "));
    assert!(ids_th.iter().all(|l| l.starts_with("TH ")), "only D and TH lines expected");
    assert_eq!(ids_d.len(), export_d.len());
    assert_eq!(ids_th.len(), export_t.len());
    assert!(lines.iter().position(|l| l.starts_with("TH ")).map_or(true, |first_th| {
        lines[first_th..].iter().all(|l| l.starts_with("TH "))
    }));

    for (adv, line) in ids_d.iter().zip(&export_d) {
        let mut parts = adv.split(' ');
        assert_eq!(parts.next(), Some("D"));
        let id = parts.next().expect("id field");
        let digest = parts.next().expect("digest field");
        assert_eq!(parts.next(), None);
        assert!(line.starts_with(&format!("D {id} ")) || *line == format!("D {id}"));
        assert_eq!(digest, sha256_hex(line.as_bytes()));
    }
    for (adv, line) in ids_th.iter().zip(&export_t) {
        let digest = adv.strip_prefix("TH ").expect("TH line");
        assert_eq!(digest.len(), 64);
        assert_eq!(digest, sha256_hex(line.as_bytes()));
    }
    server.shutdown();
}

#[test]
fn want_streams_exact_canonical_records() {
    let domain = small_domain();
    let doc_id = domain.documents().next().unwrap().0;
    let triple = *domain.triples().next().unwrap();
    let doc_line = document_line(doc_id, domain.payload(doc_id).unwrap());
    let t_line = triple_line(&triple);

    let server = serve(domain, "127.0.0.1:0").unwrap();
    let mut c = Client::connect(&server.local_addr().to_string());
    c.send("HELLO 1");
    c.recv();

    // Literal requests: one document by id, one triple spelled out.
    c.send("WANT");
    c.send(&format!("D {doc_id}"));
    c.send(&format!("T {} {} {}", triple.marker, triple.first, triple.second));
    c.send("END");
    let lines = c.recv_until_end();
    assert_eq!(lines, vec![doc_line.clone(), t_line.clone()]);

    // Hash-form triple request resolves to the same canonical line.
    c.send("WANT");
    c.send(&format!("TH {}", sha256_hex(t_line.as_bytes())));
    c.send("END");
    assert_eq!(c.recv_until_end(), vec![t_line]);

    // Unknown ids are omitted, not errors: the puller accounts for them.
    c.send("WANT");
    c.send("D 00000000000000aa-000000000000000000000000000000aa");
    c.send(&format!("D {doc_id}"));
    c.send("END");
    assert_eq!(c.recv_until_end(), vec![doc_line]);
    server.shutdown();
}

#[test]
fn malformed_requests_leave_the_connection_usable() {
    let server = serve(small_domain(), "127.0.0.1:0").unwrap();
    let mut c = Client::connect(&server.local_addr().to_string());
    c.send("HELLO 1");
    c.recv();

    c.send("FROB");
    assert_eq!(c.recv().as_deref(), Some("ERR unknown-verb"));

    c.send("WANT");
    c.send("suspicious nonsense");
    c.send("END");
    assert_eq!(c.recv().as_deref(), Some("ERR bad-request"));

    // Still alive: a well-formed exchange succeeds afterwards.
    c.send("IDS");
    assert!(!c.recv_until_end().is_empty());

    c.send("BYE");
    assert_eq!(c.recv(), None, "BYE closes the stream");
    server.shutdown();
}

#[test]
fn protocol_serves_generated_domains_faithfully() {
    // The inventory/transfer path holds on a messier domain too: request
    // everything via the wire and rebuild the full export sections.
    let (domain, _) = random_domain(7002, 18);
    let export = String::from_utf8(domain.export_canonical()).unwrap();
    let server = serve(domain, "127.0.0.1:0").unwrap();
    let mut c = Client::connect(&server.local_addr().to_string());
    c.send("HELLO 1");
    c.recv();

    c.send("IDS");
    let inventory = c.recv_until_end();

    c.send("WANT");
    for line in &inventory {
        if let Some(rest) = line.strip_prefix("D ") {
            let id = rest.split(' ').next().unwrap();
            c.send(&format!("D {id}"));
        } else {
            c.send(line); // TH <hex> round-trips as a request
        }
    }
    c.send("END");
    let records = c.recv_until_end();

    let graph_lines: Vec<&str> = export
        .lines()
        .filter(|l| l.starts_with("D ") || l.starts_with("T "))
        .collect();
    assert_eq!(records, graph_lines);
    server.shutdown();
}
