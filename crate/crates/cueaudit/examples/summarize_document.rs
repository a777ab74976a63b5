//! Runs all four deterministic extractive summarizers on one document.
//!
//! ```bash
//! cargo run -p cueaudit --example summarize_document
//! ```

use cueaudit::core::{DocumentRecord, ExtractiveMethod};
use cueaudit::summarizers::{summarize, ExtractiveConfig};

fn main() -> cueaudit::Result<()> {
    let doc = DocumentRecord::new(
        "example-doc",
        "The reservoir reached capacity after weeks of rain. Engineers opened the spillway \
         gates on Tuesday. Downstream towns prepared sandbags along the banks. The river \
         crested below the flood stage by Friday. Officials credited early releases for the \
         outcome. Cleanup crews removed debris over the weekend. Farmers reported minor \
         losses in the lowest fields.",
        "news",
    )?;

    let cfg = ExtractiveConfig { target_sentences: 3, ..Default::default() };
    for method in ExtractiveMethod::ALL {
        let summary = summarize(&doc, method, &cfg)?;
        println!("== {} ==\n{}\n", method.as_str(), summary.text);
    }
    Ok(())
}
