//! Lists the weather presets with the detection range each one leaves the ego.

use overtaking::domain::preset_catalog;
use overtaking::sim::{effective_detection_range, VisibilityParams};

fn main() {
    let vis = VisibilityParams::default();
    println!("{:<14} {:>5} {:>3} {:>6} {:>6} {:>5} {:>6}", "preset", "DN", "HL", "prec", "wind", "fog", "range");
    for p in preset_catalog() {
        println!(
            "{:<14} {:>5} {:>3} {:>6} {:>6} {:>5} {:>6.1}",
            p.name.as_str(),
            p.day_night().as_str(),
            u8::from(p.horizon_line),
            p.precipitation,
            p.wind,
            p.fog,
            effective_detection_range(&p, &vis)
        );
    }
}
