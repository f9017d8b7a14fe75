//! Transport contract tests over both backends: delivery, per-pair FIFO,
//! error surfacing, posted receives, and a sequenced soak.

use std::thread;

use sptensor::transport::{inproc, tcp, Endpoint, Tag, TransportError, ROOT};

#[test]
fn spawn_gives_unique_ranks() {
    let eps = inproc::spawn(2).unwrap();
    assert_eq!(eps.len(), 3);
    let ranks: Vec<u32> = eps.iter().map(|e| e.rank()).collect();
    assert_eq!(ranks, vec![0, 1, 2]);
    assert!(eps.iter().all(|e| e.world_size() == 3));
}

#[test]
fn spawn_rejects_zero_workers() {
    assert!(matches!(
        inproc::spawn(0),
        Err(TransportError::Config(_))
    ));
}

#[test]
fn send_then_recv_is_identical() {
    let mut eps = inproc::spawn(1).unwrap();
    let mut w = eps.pop().unwrap();
    let mut m = eps.pop().unwrap();
    m.send(1, Tag::Work, vec![1, 2, 3]).unwrap();
    let msg = w.recv_any().unwrap();
    assert_eq!(msg.tag, Tag::Work);
    assert_eq!(msg.source, ROOT);
    assert_eq!(msg.payload, vec![1, 2, 3]);
}

#[test]
fn per_pair_fifo_order() {
    let mut eps = inproc::spawn(1).unwrap();
    let mut w = eps.pop().unwrap();
    let mut m = eps.pop().unwrap();
    for i in 0..100u8 {
        m.send(1, Tag::Work, vec![i]).unwrap();
    }
    for i in 0..100u8 {
        assert_eq!(w.recv_from(ROOT).unwrap().payload, vec![i]);
    }
}

#[test]
fn send_to_terminated_rank_errors() {
    let mut eps = inproc::spawn(2).unwrap();
    let w2 = eps.pop().unwrap();
    let _w1 = eps.pop().unwrap();
    let mut m = eps.pop().unwrap();
    drop(w2);
    match m.send(2, Tag::End, vec![]) {
        Err(TransportError::PeerClosed(2)) => {}
        other => panic!("expected PeerClosed(2), got {other:?}"),
    }
}

#[test]
fn recv_any_errors_when_all_peers_terminate() {
    let mut eps = inproc::spawn(1).unwrap();
    let w = eps.pop().unwrap();
    let mut m = eps.pop().unwrap();
    drop(w);
    match m.recv_any() {
        Err(TransportError::Shutdown) => {}
        other => panic!("expected Shutdown, got {other:?}"),
    }
}

#[test]
fn recv_any_does_not_starve_a_sender() {
    // Rank 1 floods; rank 2 sends one message. Round-robin must deliver
    // rank 2's message within the first two receives.
    let mut eps = inproc::spawn(2).unwrap();
    let mut w2 = eps.pop().unwrap();
    let mut w1 = eps.pop().unwrap();
    let mut m = eps.pop().unwrap();
    for i in 0..50u8 {
        w1.send(ROOT, Tag::Result, vec![i]).unwrap();
    }
    w2.send(ROOT, Tag::Req, vec![]).unwrap();
    let sources: Vec<u32> = (0..2).map(|_| m.recv_any().unwrap().source).collect();
    assert!(sources.contains(&2), "sources seen: {sources:?}");
}

#[test]
fn posted_receive_completes_with_next_message() {
    let mut eps = inproc::spawn(1).unwrap();
    let mut w = eps.pop().unwrap();
    let mut m = eps.pop().unwrap();

    let pending = w.post_receive(ROOT).unwrap();
    // Local work may proceed and sends are fine while posted.
    w.send(ROOT, Tag::Req, vec![]).unwrap();
    m.send(1, Tag::Work, vec![9]).unwrap();
    let msg = pending.wait().unwrap();
    assert_eq!(msg.payload, vec![9]);
    assert_eq!(m.recv_from(1).unwrap().tag, Tag::Req);
}

#[test]
fn receives_are_refused_while_a_receive_is_posted() {
    let mut eps = inproc::spawn(1).unwrap();
    let mut w = eps.pop().unwrap();
    let mut m = eps.pop().unwrap();
    m.send(1, Tag::Work, vec![]).unwrap();
    let pending = w.post_receive(ROOT).unwrap();
    assert!(matches!(w.recv_any(), Err(TransportError::Usage(_))));
    assert!(matches!(w.recv_from(ROOT), Err(TransportError::Usage(_))));
    assert!(w.post_receive(ROOT).is_err());
    let msg = pending.wait().unwrap();
    assert_eq!(msg.tag, Tag::Work);
    // Cleared after completion.
    m.send(1, Tag::End, vec![]).unwrap();
    assert!(w.recv_any().is_ok());
}

#[test]
fn worker_to_worker_delivery_inproc() {
    let mut eps = inproc::spawn(2).unwrap();
    let mut w2 = eps.pop().unwrap();
    let mut w1 = eps.pop().unwrap();
    let _m = eps.pop().unwrap();
    w2.send(1, Tag::Result, vec![42]).unwrap();
    let msg = w1.recv_from(2).unwrap();
    assert_eq!(msg.payload, vec![42]);
}

fn spawn_tcp_world(workers: u32) -> Vec<tcp::TcpEndpoint> {
    let bound = tcp::bind("127.0.0.1:0").unwrap();
    let addr = bound.local_addr().unwrap();
    let handles: Vec<_> = (1..=workers)
        .map(|rank| thread::spawn(move || tcp::connect(&addr.to_string(), rank).unwrap()))
        .collect();
    let master = bound.accept_workers(workers).unwrap();
    let mut eps = vec![master];
    for h in handles {
        eps.push(h.join().unwrap());
    }
    eps.sort_by_key(|e| e.rank());
    eps
}

#[test]
fn tcp_handshake_announces_world_size() {
    let eps = spawn_tcp_world(3);
    assert_eq!(eps.len(), 4);
    assert!(eps.iter().all(|e| e.world_size() == 4));
}

#[test]
fn tcp_round_trip_of_a_megabyte_payload() {
    let mut eps = spawn_tcp_world(1);
    let mut w = eps.pop().unwrap();
    let mut m = eps.pop().unwrap();
    let payload: Vec<u8> = (0..1_000_000u32).map(|i| (i % 251) as u8).collect();
    m.send(1, Tag::Result, payload.clone()).unwrap();
    let msg = w.recv_from(ROOT).unwrap();
    assert_eq!(msg.payload, payload);
    assert_eq!(msg.tag, Tag::Result);
}

#[test]
fn tcp_worker_to_worker_via_lazy_link() {
    let mut eps = spawn_tcp_world(2);
    let w2 = eps.pop().unwrap();
    let mut w1 = eps.pop().unwrap();
    let _m = eps.pop().unwrap();
    let h = thread::spawn(move || {
        let mut w2 = w2;
        w2.send(1, Tag::Result, vec![7, 7]).unwrap();
        w2
    });
    let msg = w1.recv_from(2).unwrap();
    assert_eq!(msg.payload, vec![7, 7]);
    let _ = h.join().unwrap();
}

/// Sequenced soak: no loss, no duplication, no reordering per sender pair.
fn soak<E: Endpoint + Send + 'static>(mut master: E, workers: Vec<E>, per_worker: u32) {
    let handles: Vec<_> = workers
        .into_iter()
        .map(|mut ep| {
            thread::spawn(move || {
                let rank = ep.rank();
                for seq in 0..per_worker {
                    let mut payload = rank.to_le_bytes().to_vec();
                    payload.extend_from_slice(&seq.to_le_bytes());
                    ep.send(ROOT, Tag::Result, payload).unwrap();
                }
                ep
            })
        })
        .collect();
    let total = per_worker as usize * handles.len();
    let mut next_seq = vec![0u32; handles.len() + 1];
    for _ in 0..total {
        let msg = master.recv_any().unwrap();
        let rank = u32::from_le_bytes(msg.payload[0..4].try_into().unwrap());
        let seq = u32::from_le_bytes(msg.payload[4..8].try_into().unwrap());
        assert_eq!(msg.source, rank);
        assert_eq!(seq, next_seq[rank as usize], "reorder from rank {rank}");
        next_seq[rank as usize] = seq + 1;
    }
    for h in handles {
        let _ = h.join().unwrap();
    }
    for (rank, &n) in next_seq.iter().enumerate().skip(1) {
        assert_eq!(n, per_worker, "loss from rank {rank}");
    }
}

#[test]
fn soak_inproc_100k_messages() {
    let mut eps = inproc::spawn(4).unwrap();
    let master = eps.remove(0);
    soak(master, eps, 25_000);
}

#[test]
fn soak_tcp_100k_messages() {
    let mut eps = spawn_tcp_world(4);
    let master = eps.remove(0);
    soak(master, eps, 25_000);
}
