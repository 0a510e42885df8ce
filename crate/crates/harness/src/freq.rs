//! Token-frequency coverage of a whitespace-separated token stream.

use std::path::Path;

use rdk_core::TokenFrequencyTable;

use crate::error::{HarnessError, HarnessResult};
use crate::io::{csv_buffer, finish_csv, fmt_f, parse_whitespace, read_text};

#[derive(Debug, Clone, PartialEq)]
pub struct FreqSummary {
    pub quantile: f64,
    pub tokens: usize,
    pub vocab: usize,
    pub fraction: f64,
    pub stream_len: u64,
}

impl FreqSummary {
    pub fn line(&self) -> String {
        format!(
            "quantile={} tokens={} vocab={} fraction={} stream_len={}",
            fmt_f(self.quantile),
            self.tokens,
            self.vocab,
            fmt_f(self.fraction),
            self.stream_len
        )
    }
}

pub fn table_from_text(text: &str, vocab: Option<usize>) -> HarnessResult<TokenFrequencyTable> {
    let tokens: Vec<usize> = parse_whitespace(text, "token")?;
    if tokens.is_empty() {
        return Err(HarnessError::Usage("token stream is empty".into()));
    }
    TokenFrequencyTable::from_tokens(tokens, vocab).map_err(|e| HarnessError::Usage(e.to_string()))
}

pub fn summarize(table: &TokenFrequencyTable, quantile: f64) -> HarnessResult<FreqSummary> {
    let tokens = table
        .tokens_for_quantile(quantile)
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    Ok(FreqSummary {
        quantile,
        tokens,
        vocab: table.vocab_size(),
        fraction: tokens as f64 / table.vocab_size() as f64,
        stream_len: table.total(),
    })
}

/// Writes the coverage curve to `out` and returns the quantile summary.
pub fn run_freq(input: &Path, quantile: f64, vocab: Option<usize>, out: &Path) -> HarnessResult<FreqSummary> {
    let table = table_from_text(&read_text(input)?, vocab)?;
    let summary = summarize(&table, quantile)?;
    let mut w = csv_buffer();
    w.write_record(["rank", "token", "count", "cum_fraction"])?;
    for p in table.coverage_curve() {
        w.write_record([
            p.rank.to_string(),
            p.token.to_string(),
            p.count.to_string(),
            fmt_f(p.cum_fraction),
        ])?;
    }
    finish_csv(w, out)?;
    Ok(summary)
}

pub fn write_summary(s: &FreqSummary, path: &Path) -> HarnessResult<()> {
    let mut w = csv_buffer();
    w.write_record(["quantile", "tokens", "vocab", "fraction", "stream_len"])?;
    w.write_record([
        fmt_f(s.quantile),
        s.tokens.to_string(),
        s.vocab.to_string(),
        fmt_f(s.fraction),
        s.stream_len.to_string(),
    ])?;
    finish_csv(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_and_single() {
        let text: String = (0..100).map(|i| format!("{i} ")).collect();
        let s = summarize(&table_from_text(&text, None).unwrap(), 0.95).unwrap();
        assert_eq!(s.tokens, 95);
        assert!((s.fraction - 0.95).abs() < 1e-15);
        let s = summarize(&table_from_text("4\n4 4", Some(10)).unwrap(), 0.5).unwrap();
        assert_eq!(s.tokens, 1);
        assert_eq!(s.vocab, 10);
    }

    #[test]
    fn bad_input_is_usage_error() {
        assert!(matches!(table_from_text("  \n", None), Err(HarnessError::Usage(_))));
        assert!(matches!(table_from_text("1 x 2", None), Err(HarnessError::Usage(_))));
        assert!(matches!(table_from_text("1 -2", None), Err(HarnessError::Usage(_))));
    }
}
