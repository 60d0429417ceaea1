//! Recent-changes ingestion: channel naming, IRC line parsing and the two
//! stream sources (deterministic replay files and a live IRC client).
//!
//! Wire contract for one message body, after IRC formatting codes are
//! stripped:
//!
//! ```text
//! [[<title>]] <flags> <url> * <editor> * (<signed-int>) <comment>
//! ```
//!
//! `flags` and `comment` may be empty. Replay files carry one record per
//! line as `<unix-ts>\t<channel>\t<raw-irc-line>`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize_title;

/// Language editions monitored when no explicit list is configured.
pub const DEFAULT_LANGUAGES: &[&str] = &[
    "en", "de", "fr", "nl", "it", "es", "ru", "sv", "pl", "ja", "pt", "zh", "uk", "ca", "no", "fi",
    "cs", "hu", "ko", "fa", "id", "tr", "ro", "ar", "sk", "da", "eo", "sr", "lt", "kk", "he", "ms",
    "bg", "eu", "sl", "vi", "hr", "et", "hi", "el", "wikidata",
];

pub const LIVE_SERVER: &str = "irc.wikimedia.org:6667";

/// One parsed recent-changes notification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EditEvent {
    pub language: String,
    pub title: String,
    pub editor: String,
    pub byte_delta: i64,
    pub diff_url: String,
    pub comment: String,
    pub timestamp: i64,
    pub flags: String,
}

impl EditEvent {
    pub fn is_flagged_bot(&self) -> bool {
        self.flags.contains('B')
    }

    /// Canonical message body for this event (inverse of [`parse_irc_line`]
    /// on stripped lines).
    pub fn to_irc_line(&self) -> String {
        let delta = if self.byte_delta > 0 {
            format!("+{}", self.byte_delta)
        } else {
            self.byte_delta.to_string()
        };
        format!(
            "[[{}]] {} {} * {} * ({}) {}",
            self.title, self.flags, self.diff_url, self.editor, delta, self.comment
        )
    }
}

pub fn channel_for_language(language: &str) -> Result<String> {
    if language.is_empty() || language.chars().any(char::is_whitespace) {
        return Err(Error::InvalidLanguage(language.to_owned()));
    }
    Ok(format!("#{language}.wikipedia"))
}

pub fn language_for_channel(channel: &str) -> Result<&str> {
    channel
        .strip_prefix('#')
        .and_then(|c| c.strip_suffix(".wikipedia"))
        .filter(|l| {
            !l.is_empty()
                && !l.chars().any(char::is_whitespace)
                && !l.chars().any(char::is_uppercase)
        })
        .ok_or_else(|| Error::InvalidChannel(channel.to_owned()))
}

/// Removes mIRC bold (0x02), color (0x03 with up to two digits and an
/// optional `,<digits>` background), reset (0x0F) and underline (0x1F) codes.
pub fn strip_control_codes(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\u{02}' | '\u{0f}' | '\u{1f}' => {}
            '\u{03}' => {
                let mut fg_digits = 0;
                while fg_digits < 2 && chars.next_if(char::is_ascii_digit).is_some() {
                    fg_digits += 1;
                }
                let mut lookahead = chars.clone();
                if fg_digits > 0
                    && lookahead.next() == Some(',')
                    && lookahead.next().is_some_and(|c| c.is_ascii_digit())
                {
                    chars.next();
                    for _ in 0..2 {
                        if chars.next_if(char::is_ascii_digit).is_none() {
                            break;
                        }
                    }
                }
            }
            _ => out.push(c),
        }
    }
    out
}

pub fn parse_irc_line(channel: &str, line: &str, arrival: i64) -> Result<EditEvent> {
    let language = language_for_channel(channel)?;
    if arrival <= 0 {
        return Err(Error::parse("non-positive timestamp", line));
    }
    let clean = strip_control_codes(line);

    let body = clean
        .trim_start()
        .strip_prefix("[[")
        .ok_or_else(|| Error::parse("missing [[", line))?;
    let close = body
        .find("]]")
        .ok_or_else(|| Error::parse("missing ]]", line))?;
    let title = normalize_title(body[..close].trim());
    if title.is_empty() {
        return Err(Error::parse("empty title", line));
    }
    let after_title = &body[close + 2..];

    let first_star = after_title
        .find(" * ")
        .ok_or_else(|| Error::parse("missing editor segment", line))?;
    let head = &after_title[..first_star];
    let tail = &after_title[first_star + 3..];
    let second_star = tail
        .find(" * ")
        .ok_or_else(|| Error::parse("missing editor segment", line))?;
    let editor = tail[..second_star].trim();
    let rest = &tail[second_star + 3..];

    let mut head_tokens: Vec<&str> = head.split_whitespace().collect();
    let diff_url = head_tokens
        .pop()
        .ok_or_else(|| Error::parse("missing diff url", line))?;
    let flags = head_tokens.join(" ");

    let delta_body = rest
        .strip_prefix('(')
        .ok_or_else(|| Error::parse("missing byte delta", line))?;
    let close_paren = delta_body
        .find(')')
        .ok_or_else(|| Error::parse("missing byte delta", line))?;
    let byte_delta: i64 = delta_body[..close_paren]
        .trim_start_matches('+')
        .parse()
        .map_err(|_| Error::parse("non-integer byte delta", line))?;
    let comment = delta_body[close_paren + 1..].trim();

    Ok(EditEvent {
        language: language.to_owned(),
        title,
        editor: editor.to_owned(),
        byte_delta,
        diff_url: diff_url.to_owned(),
        comment: comment.to_owned(),
        timestamp: arrival,
        flags,
    })
}

/// A `(channel, rawLine, arrivalTimestamp)` triple as delivered by a source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub channel: String,
    pub line: String,
    pub timestamp: i64,
}

impl RawRecord {
    pub fn parse(&self) -> Result<EditEvent> {
        parse_irc_line(&self.channel, &self.line, self.timestamp)
    }
}

/// Producer of raw recent-changes records. `None` means the source is
/// exhausted; record-level errors do not end the stream.
pub trait StreamSource: Send {
    fn next_record(&mut self) -> Option<Result<RawRecord>>;
}

/// Runs `source` on its own thread and hands records to a single consumer
/// in production order.
pub fn spawn_producer<S>(mut source: S, capacity: usize) -> mpsc::Receiver<Result<RawRecord>>
where
    S: StreamSource + 'static,
{
    let (tx, rx) = mpsc::sync_channel(capacity.max(1));
    thread::spawn(move || {
        while let Some(record) = source.next_record() {
            if tx.send(record).is_err() {
                break;
            }
        }
    });
    rx
}

/// Reads a replay fixture: one `<unix-ts>\t<channel>\t<raw-irc-line>` per
/// line. Blank lines are skipped.
#[derive(Debug)]
pub struct ReplaySource {
    lines: std::vec::IntoIter<(usize, String)>,
}

impl ReplaySource {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_text(&text))
    }

    pub fn from_text(text: &str) -> Self {
        let lines: Vec<(usize, String)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l.to_owned()))
            .collect();
        Self {
            lines: lines.into_iter(),
        }
    }
}

pub fn parse_replay_record(line_no: usize, line: &str) -> Result<RawRecord> {
    let mut parts = line.splitn(3, '\t');
    let (ts, channel, raw) = match (parts.next(), parts.next(), parts.next()) {
        (Some(ts), Some(ch), Some(raw)) => (ts, ch, raw),
        _ => {
            return Err(Error::ReplayRecord {
                line_no,
                reason: "expected three tab-separated fields".into(),
            })
        }
    };
    let timestamp: i64 = ts.trim().parse().map_err(|_| Error::ReplayRecord {
        line_no,
        reason: format!("bad timestamp {ts:?}"),
    })?;
    language_for_channel(channel).map_err(|_| Error::ReplayRecord {
        line_no,
        reason: format!("bad channel {channel:?}"),
    })?;
    Ok(RawRecord {
        channel: channel.to_owned(),
        line: raw.to_owned(),
        timestamp,
    })
}

/// Formats a record in the replay fixture layout.
pub fn format_replay_record(record: &RawRecord) -> String {
    format!("{}\t{}\t{}", record.timestamp, record.channel, record.line)
}

impl Iterator for ReplaySource {
    type Item = Result<RawRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line_no, line) = self.lines.next()?;
        Some(parse_replay_record(line_no, &line))
    }
}

impl StreamSource for ReplaySource {
    fn next_record(&mut self) -> Option<Result<RawRecord>> {
        self.next()
    }
}

/// Plaintext IRC client for the Wikimedia recent-changes server. Read-only:
/// it registers, joins the requested channels and answers PINGs.
pub struct IrcSource {
    server: String,
    nick: String,
    channels: Vec<String>,
    reader: Option<BufReader<TcpStream>>,
    max_backoff: Duration,
    max_attempts: u32,
}

impl IrcSource {
    pub fn new(
        server: impl Into<String>,
        nick: impl Into<String>,
        languages: &[String],
    ) -> Result<Self> {
        let channels = languages
            .iter()
            .map(|l| channel_for_language(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            server: server.into(),
            nick: nick.into(),
            channels,
            reader: None,
            max_backoff: Duration::from_secs(64),
            max_attempts: 8,
        })
    }

    pub fn with_retry(mut self, max_attempts: u32, max_backoff: Duration) -> Self {
        self.max_attempts = max_attempts;
        self.max_backoff = max_backoff;
        self
    }

    fn connect(&mut self) -> std::io::Result<()> {
        let stream = TcpStream::connect(&self.server)?;
        let mut writer = stream.try_clone()?;
        write!(
            writer,
            "NICK {}\r\nUSER {} 0 * :{}\r\n",
            self.nick, self.nick, self.nick
        )?;
        for channel in &self.channels {
            write!(writer, "JOIN {channel}\r\n")?;
        }
        writer.flush()?;
        self.reader = Some(BufReader::new(stream));
        Ok(())
    }

    fn ensure_connected(&mut self) -> Option<std::io::Error> {
        let mut delay = Duration::from_millis(500);
        let mut last_err = None;
        for _ in 0..self.max_attempts {
            if self.reader.is_some() {
                return None;
            }
            match self.connect() {
                Ok(()) => return None,
                Err(e) => {
                    log::warn!(
                        "irc connect to {} failed: {e}; retrying in {delay:?}",
                        self.server
                    );
                    last_err = Some(e);
                    thread::sleep(delay);
                    delay = (delay * 2).min(self.max_backoff);
                }
            }
        }
        last_err
    }
}

/// Splits an IRC protocol line into `(channel, message)` for PRIVMSGs.
pub fn parse_privmsg(line: &str) -> Option<(&str, &str)> {
    let rest = line
        .strip_prefix(':')
        .map_or(line, |l| l.split_once(' ').map_or("", |(_, r)| r));
    let rest = rest.strip_prefix("PRIVMSG ")?;
    let (target, msg) = rest.split_once(' ')?;
    Some((target, msg.strip_prefix(':').unwrap_or(msg)))
}

fn unix_now() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0)
}

impl StreamSource for IrcSource {
    fn next_record(&mut self) -> Option<Result<RawRecord>> {
        loop {
            if let Some(err) = self.ensure_connected() {
                return Some(Err(Error::io(self.server.clone(), err)));
            }
            let reader = self.reader.as_mut()?;
            let mut buf = Vec::new();
            match reader.read_until(b'\n', &mut buf) {
                Ok(0) | Err(_) => {
                    log::warn!("irc connection to {} lost", self.server);
                    self.reader = None;
                    continue;
                }
                Ok(_) => {}
            }
            let line = String::from_utf8_lossy(&buf);
            let line = line.trim_end_matches(['\r', '\n']);
            if let Some(token) = line.strip_prefix("PING ") {
                let stream = reader.get_mut();
                if write!(stream, "PONG {token}\r\n").is_err() {
                    self.reader = None;
                }
                continue;
            }
            if let Some((channel, msg)) = parse_privmsg(line) {
                if language_for_channel(channel).is_ok() {
                    return Some(Ok(RawRecord {
                        channel: channel.to_owned(),
                        line: msg.to_owned(),
                        timestamp: unix_now(),
                    }));
                }
            }
        }
    }
}
