//! Replays the shipped published count tables through the analysis pipeline
//! and prints the match/flag report, including the known source
//! inconsistency that is surfaced rather than matched.
//!
//! ```bash
//! cargo run -p cueaudit --example replay_published_tables
//! ```

use cueaudit::fixtures::replay_fixtures;

fn main() -> cueaudit::Result<()> {
    let report = replay_fixtures()?;
    print!("{}", report.render_text());
    for c in report.flagged() {
        println!(
            "flagged: {} {} {} derived {:.3} vs reported {:.3}",
            c.table, c.judge, c.metric, c.derived, c.expected
        );
    }
    Ok(())
}
