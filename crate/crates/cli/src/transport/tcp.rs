//! TCP backend for multi-process runs.
//!
//! Wire framing per message: tag `u8`, source rank `u32`, payload length
//! `u32`, payload bytes (integers little-endian).
//!
//! Topology: the master listens; each worker binds its own peer listener on
//! an ephemeral port, dials the master, and handshakes by sending its rank
//! and listener port. Once all workers have joined, the master acknowledges
//! each with the world size plus the full roster (rank, address, port), which
//! gives every endpoint all-to-all reach: worker-to-worker links are dialed
//! lazily on first send, opened with a rank preamble.

use std::io::{Read, Write};
use std::net::{IpAddr, Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, Sender};

use super::inbox::Inbox;
use super::{Endpoint, Message, PendingReceive, Rank, Tag, TransportError, ROOT};

const MAX_PAYLOAD: u32 = 1 << 30;
const CONNECT_RETRY_WINDOW: Duration = Duration::from_secs(15);

fn frame_bytes(tag: Tag, source: Rank, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(9 + payload.len());
    out.push(tag as u8);
    out.extend_from_slice(&source.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    out
}

fn read_frame(stream: &mut TcpStream) -> Result<Message, TransportError> {
    let mut header = [0u8; 9];
    stream.read_exact(&mut header)?;
    let tag = Tag::from_u8(header[0])
        .ok_or_else(|| TransportError::Frame(format!("unknown tag byte 0x{:02x}", header[0])))?;
    let source = u32::from_le_bytes(header[1..5].try_into().unwrap());
    let len = u32::from_le_bytes(header[5..9].try_into().unwrap());
    if len > MAX_PAYLOAD {
        return Err(TransportError::Frame(format!(
            "payload length {len} exceeds limit"
        )));
    }
    let mut payload = vec![0u8; len as usize];
    stream.read_exact(&mut payload)?;
    Ok(Message {
        tag,
        source,
        payload,
    })
}

fn spawn_reader(
    mut stream: TcpStream,
    expected_source: Rank,
    sender: Sender<Message>,
) -> thread::JoinHandle<()> {
    thread::spawn(move || {
        loop {
            match read_frame(&mut stream) {
                Ok(msg) => {
                    if msg.source != expected_source {
                        // A peer announcing one rank and framing another is a
                        // protocol violation; drop the link.
                        break;
                    }
                    if sender.send(msg).is_err() {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
        // Dropping the sender marks this peer's queue disconnected.
    })
}

fn encode_addr(addr: &SocketAddr, out: &mut Vec<u8>) {
    match addr.ip() {
        IpAddr::V4(ip) => {
            out.push(4);
            out.extend_from_slice(&ip.octets());
        }
        IpAddr::V6(ip) => {
            out.push(6);
            out.extend_from_slice(&ip.octets());
        }
    }
    out.extend_from_slice(&addr.port().to_le_bytes());
}

fn read_addr(stream: &mut TcpStream) -> Result<SocketAddr, TransportError> {
    let mut kind = [0u8; 1];
    stream.read_exact(&mut kind)?;
    let ip: IpAddr = match kind[0] {
        4 => {
            let mut b = [0u8; 4];
            stream.read_exact(&mut b)?;
            IpAddr::from(b)
        }
        6 => {
            let mut b = [0u8; 16];
            stream.read_exact(&mut b)?;
            IpAddr::from(b)
        }
        k => {
            return Err(TransportError::Handshake(format!(
                "unknown address family tag {k}"
            )))
        }
    };
    let mut port = [0u8; 2];
    stream.read_exact(&mut port)?;
    Ok(SocketAddr::new(ip, u16::from_le_bytes(port)))
}

pub struct TcpEndpoint {
    rank: Rank,
    world: u32,
    inbox: Inbox,
    writers: Vec<Option<TcpStream>>,
    roster: Vec<Option<SocketAddr>>,
    sent: u64,
    stop: Arc<AtomicBool>,
    /// Clones of inbound streams so `Drop` can unblock reader threads.
    inbound: Arc<Mutex<Vec<TcpStream>>>,
    accept_thread: Option<thread::JoinHandle<()>>,
}

/// A bound master listener whose port is known before workers join.
pub struct Bound {
    listener: TcpListener,
}

impl Bound {
    pub fn local_addr(&self) -> Result<SocketAddr, TransportError> {
        Ok(self.listener.local_addr()?)
    }

    /// Collects `workers` handshakes and broadcasts the roster.
    pub fn accept_workers(self, workers: u32) -> Result<TcpEndpoint, TransportError> {
        accept_workers(self.listener, workers)
    }
}

pub fn bind(addr: &str) -> Result<Bound, TransportError> {
    Ok(Bound {
        listener: TcpListener::bind(addr)?,
    })
}

/// Master side: listen, collect `workers` handshakes, broadcast the roster.
pub fn listen(addr: &str, workers: u32) -> Result<TcpEndpoint, TransportError> {
    bind(addr)?.accept_workers(workers)
}

fn accept_workers(listener: TcpListener, workers: u32) -> Result<TcpEndpoint, TransportError> {
    if workers == 0 {
        return Err(TransportError::Config(
            "at least one worker is required".into(),
        ));
    }
    let world = workers + 1;
    let mut streams: Vec<Option<TcpStream>> = (0..world).map(|_| None).collect();
    let mut roster: Vec<Option<SocketAddr>> = (0..world).map(|_| None).collect();
    let mut joined = 0;
    while joined < workers {
        let (mut stream, peer) = listener.accept()?;
        stream.set_nodelay(true)?;
        let mut hello = [0u8; 6];
        stream.read_exact(&mut hello)?;
        let rank = u32::from_le_bytes(hello[0..4].try_into().unwrap());
        let listen_port = u16::from_le_bytes(hello[4..6].try_into().unwrap());
        if rank == ROOT || rank >= world {
            return Err(TransportError::Handshake(format!(
                "worker announced rank {rank}, expected 1..={workers}"
            )));
        }
        if streams[rank as usize].is_some() {
            return Err(TransportError::Handshake(format!(
                "duplicate handshake for rank {rank}"
            )));
        }
        roster[rank as usize] = Some(SocketAddr::new(peer.ip(), listen_port));
        streams[rank as usize] = Some(stream);
        joined += 1;
    }
    // Acknowledge: world size, then the full worker roster.
    let mut ack = Vec::new();
    ack.extend_from_slice(&world.to_le_bytes());
    for r in 1..world {
        encode_addr(roster[r as usize].as_ref().unwrap(), &mut ack);
    }
    for s in streams.iter_mut().flatten() {
        s.write_all(&ack)?;
        s.flush()?;
    }

    let mut queues: Vec<Option<Receiver<Message>>> = (0..world).map(|_| None).collect();
    let inbound = Arc::new(Mutex::new(Vec::new()));
    for r in 1..world {
        let stream = streams[r as usize].as_ref().unwrap();
        let reader = stream.try_clone()?;
        inbound.lock().unwrap().push(reader.try_clone()?);
        let (tx, rx) = unbounded();
        queues[r as usize] = Some(rx);
        spawn_reader(reader, r, tx);
    }
    Ok(TcpEndpoint {
        rank: ROOT,
        world,
        inbox: Inbox::new(queues),
        writers: streams,
        roster,
        sent: 0,
        stop: Arc::new(AtomicBool::new(false)),
        inbound,
        accept_thread: None,
    })
}

/// Worker side: bind a peer listener, dial the master (retrying while it
/// comes up), handshake, then accept lazy peer links in the background.
pub fn connect(master_addr: &str, rank: Rank) -> Result<TcpEndpoint, TransportError> {
    if rank == ROOT {
        return Err(TransportError::Config(
            "worker rank must be nonzero".into(),
        ));
    }
    let peer_listener = TcpListener::bind("0.0.0.0:0")?;
    let listen_port = peer_listener.local_addr()?.port();

    let deadline = Instant::now() + CONNECT_RETRY_WINDOW;
    let mut master = loop {
        match TcpStream::connect(master_addr) {
            Ok(s) => break s,
            Err(e) if Instant::now() < deadline => {
                let _ = e;
                thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(e.into()),
        }
    };
    master.set_nodelay(true)?;
    let mut hello = Vec::with_capacity(6);
    hello.extend_from_slice(&rank.to_le_bytes());
    hello.extend_from_slice(&listen_port.to_le_bytes());
    master.write_all(&hello)?;
    master.flush()?;

    let mut world_bytes = [0u8; 4];
    master.read_exact(&mut world_bytes)?;
    let world = u32::from_le_bytes(world_bytes);
    if rank >= world {
        return Err(TransportError::Handshake(format!(
            "rank {rank} is outside the announced world of {world}"
        )));
    }
    let mut roster: Vec<Option<SocketAddr>> = (0..world).map(|_| None).collect();
    for r in 1..world {
        roster[r as usize] = Some(read_addr(&mut master)?);
    }

    let mut queues: Vec<Option<Receiver<Message>>> = (0..world).map(|_| None).collect();
    let mut pending: Vec<Option<Sender<Message>>> = (0..world).map(|_| None).collect();
    for r in 0..world {
        if r == rank {
            continue;
        }
        let (tx, rx) = unbounded();
        queues[r as usize] = Some(rx);
        pending[r as usize] = Some(tx);
    }
    let inbound = Arc::new(Mutex::new(Vec::new()));

    // Master link is live now.
    let master_reader = master.try_clone()?;
    inbound.lock().unwrap().push(master_reader.try_clone()?);
    spawn_reader(master_reader, ROOT, pending[ROOT as usize].take().unwrap());

    // Remaining senders are claimed as peers dial in.
    let pending = Arc::new(Mutex::new(pending));
    let stop = Arc::new(AtomicBool::new(false));
    let accept_thread = {
        let pending = Arc::clone(&pending);
        let stop = Arc::clone(&stop);
        let inbound = Arc::clone(&inbound);
        peer_listener.set_nonblocking(true)?;
        thread::spawn(move || {
            while !stop.load(Ordering::SeqCst) {
                match peer_listener.accept() {
                    Ok((mut stream, _)) => {
                        let _ = stream.set_nodelay(true);
                        let mut preamble = [0u8; 4];
                        if stream.set_nonblocking(false).is_err()
                            || stream.read_exact(&mut preamble).is_err()
                        {
                            continue;
                        }
                        let peer = u32::from_le_bytes(preamble);
                        let Some(tx) = pending
                            .lock()
                            .unwrap()
                            .get_mut(peer as usize)
                            .and_then(Option::take)
                        else {
                            continue; // unknown or already-connected rank
                        };
                        if let Ok(clone) = stream.try_clone() {
                            inbound.lock().unwrap().push(clone);
                        }
                        spawn_reader(stream, peer, tx);
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        thread::sleep(Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        })
    };

    let mut writers: Vec<Option<TcpStream>> = (0..world).map(|_| None).collect();
    writers[ROOT as usize] = Some(master);
    Ok(TcpEndpoint {
        rank,
        world,
        inbox: Inbox::new(queues),
        writers,
        roster,
        sent: 0,
        stop,
        inbound,
        accept_thread: Some(accept_thread),
    })
}

impl TcpEndpoint {
    fn writer_for(&mut self, to: Rank) -> Result<&mut TcpStream, TransportError> {
        if to == self.rank || to >= self.world {
            return Err(TransportError::PeerClosed(to));
        }
        if self.writers[to as usize].is_none() {
            let addr = self.roster[to as usize]
                .ok_or(TransportError::PeerClosed(to))?;
            let mut stream = TcpStream::connect(addr)?;
            stream.set_nodelay(true)?;
            stream.write_all(&self.rank.to_le_bytes())?;
            self.writers[to as usize] = Some(stream);
        }
        Ok(self.writers[to as usize].as_mut().unwrap())
    }
}

impl Endpoint for TcpEndpoint {
    fn rank(&self) -> Rank {
        self.rank
    }

    fn world_size(&self) -> u32 {
        self.world
    }

    fn send(&mut self, to: Rank, tag: Tag, payload: Vec<u8>) -> Result<(), TransportError> {
        let rank = self.rank;
        let frame = frame_bytes(tag, rank, &payload);
        let stream = self.writer_for(to)?;
        match stream.write_all(&frame).and_then(|_| stream.flush()) {
            Ok(()) => {
                self.sent += 1;
                Ok(())
            }
            Err(e)
                if matches!(
                    e.kind(),
                    std::io::ErrorKind::BrokenPipe
                        | std::io::ErrorKind::ConnectionReset
                        | std::io::ErrorKind::ConnectionAborted
                ) =>
            {
                self.writers[to as usize] = None;
                Err(TransportError::PeerClosed(to))
            }
            Err(e) => Err(e.into()),
        }
    }

    fn recv_any(&mut self) -> Result<Message, TransportError> {
        self.inbox.recv_any()
    }

    fn recv_from(&mut self, from: Rank) -> Result<Message, TransportError> {
        self.inbox.recv_from(from)
    }

    fn post_receive(&mut self, from: Rank) -> Result<PendingReceive, TransportError> {
        self.inbox.post(from)
    }

    fn messages_sent(&self) -> u64 {
        self.sent
    }

    fn messages_received(&self) -> u64 {
        self.inbox
            .received_counter()
            .load(Ordering::Relaxed)
    }
}

impl Drop for TcpEndpoint {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.writers.clear();
        for stream in self.inbound.lock().unwrap().drain(..) {
            let _ = stream.shutdown(Shutdown::Both);
        }
        if let Some(h) = self.accept_thread.take() {
            let _ = h.join();
        }
    }
}
