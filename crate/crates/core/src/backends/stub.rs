//! Minimal in-process HTTP server speaking the inference protocol with mock
//! backends. Used by tests and for exercising remote mode locally.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use super::mock::MockScorer;
use super::protocol::{handle_request, InferenceRequest, InferenceResponse};
use super::BackendSuite;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubBehavior {
    /// Answer every request with the mock suite.
    Serve,
    /// Reply 200 with a body that is not a protocol response.
    Malformed,
    /// Reply 503 to the first `n` requests, then serve.
    Unavailable(usize),
}

pub struct StubServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    requests: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn spawn(behavior: StubBehavior) -> std::io::Result<Self> {
        Self::spawn_with(behavior, BackendSuite::mock(MockScorer::default()))
    }

    pub fn spawn_with(behavior: StubBehavior, suite: BackendSuite<f64>) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(AtomicUsize::new(0));
        let handle = {
            let stop = Arc::clone(&stop);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let n = requests.fetch_add(1, Ordering::SeqCst);
                    let suite = suite.clone();
                    std::thread::spawn(move || {
                        if let Err(e) = serve_one(stream, behavior, n, &suite) {
                            log::debug!("stub connection failed: {e}");
                        }
                    });
                }
            })
        };
        Ok(StubServer {
            addr,
            stop,
            requests,
            handle: Some(handle),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}/infer", self.addr)
    }

    /// Connections accepted so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve_one(
    stream: TcpStream,
    behavior: StubBehavior,
    index: usize,
    suite: &BackendSuite<f64>,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut content_length = 0usize;
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((name, value)) = l.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let (status, reply) = match behavior {
        StubBehavior::Malformed => ("200 OK", "this is not json".to_owned()),
        StubBehavior::Unavailable(n) if index < n => (
            "503 Service Unavailable",
            r#"{"status":"error","message":"warming up"}"#.to_owned(),
        ),
        _ => {
            let resp = match serde_json::from_slice::<InferenceRequest>(&body) {
                Ok(req) => handle_request(suite, &req),
                Err(e) => InferenceResponse::error(format!("bad request: {e}")),
            };
            ("200 OK", serde_json::to_string(&resp).expect("response serializes"))
        }
    };
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
        reply.len()
    )?;
    stream.flush()
}
