//! Applies both anchoring attacks to a summary and checks that content is
//! preserved under the attack-specific equivalence.
//!
//! ```bash
//! cargo run -p cueaudit --example attack_summaries
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cueaudit::attacks::{
    confidence_attack, verbosity_attack, verify_content_preserved, AttackConfig,
};
use cueaudit::core::{SummaryOrigin, SummaryRecord};

fn main() -> cueaudit::Result<()> {
    let summary = SummaryRecord::new(
        "s1",
        "d1",
        "The report suggests that the levees might hold. Damage was approximately half of \
         the early estimate. Officials could reopen the crossings this week.",
        SummaryOrigin::Llm,
    )?;
    println!("original:\n{}\n", summary.text);

    let cfg = AttackConfig { verbosity_factor: 1.5, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let verbose = verbosity_attack(&summary, &cfg, &mut rng)?;
    println!("verbosity x1.5 (preserved={}):\n{}\n",
        verify_content_preserved(&summary, &verbose, &cfg), verbose.text);

    let confident = confidence_attack(&summary, &cfg)?;
    println!("confidence (preserved={}):\n{}",
        verify_content_preserved(&summary, &confident, &cfg), confident.text);
    Ok(())
}
