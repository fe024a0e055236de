use std::io::Write;

use super::train::EpochMetrics;

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

/// Writes `epoch,train_loss,train_acc,val_loss,val_acc`, one row per epoch,
/// reals at six significant digits.
pub fn write_history_csv<W: Write>(history: &[EpochMetrics], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HISTORY_HEADER}")?;
    for m in history {
        writeln!(
            out,
            "{},{},{},{},{}",
            m.epoch,
            sig6(m.train_loss),
            sig6(m.train_acc),
            sig6(m.val_loss),
            sig6(m.val_acc)
        )?;
    }
    out.flush()
}

/// `%.6g`-style formatting: six significant digits, trailing zeros trimmed,
/// scientific notation outside `1e-4 <= |x| < 1e6`.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
