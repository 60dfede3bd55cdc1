//! Line-oriented event trace:
//! `time_s<TAB>kind<TAB>src<TAB>dst<TAB>query_id<TAB>detail`.
//! Absent fields are written as `-`; `detail` is a space-separated list of
//! `key=value` pairs.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub time_s: f64,
    pub kind: String,
    pub src: Option<u32>,
    pub dst: Option<u32>,
    pub query_id: Option<u32>,
    pub detail: Vec<(String, String)>,
}

impl TraceLine {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.detail.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn opt(v: Option<u32>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.9}\t{}\t{}\t{}\t{}\t",
            self.time_s,
            self.kind,
            opt(self.src),
            opt(self.dst),
            opt(self.query_id)
        )?;
        if self.detail.is_empty() {
            return f.write_str("-");
        }
        for (i, (k, v)) in self.detail.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Parses a line produced by [`TraceLine`]'s `Display`.
pub fn parse_trace_line(line: &str) -> Option<TraceLine> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 6 {
        return None;
    }
    let field = |s: &str| -> Option<Option<u32>> {
        if s == "-" {
            Some(None)
        } else {
            s.parse().ok().map(Some)
        }
    };
    let detail = if cols[5] == "-" {
        Vec::new()
    } else {
        cols[5]
            .split(' ')
            .map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
            .collect::<Option<Vec<_>>>()?
    };
    Some(TraceLine {
        time_s: cols[0].parse().ok()?,
        kind: cols[1].to_string(),
        src: field(cols[2])?,
        dst: field(cols[3])?,
        query_id: field(cols[4])?,
        detail,
    })
}
