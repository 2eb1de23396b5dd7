//! Divides a chamber phantom into six myocardial segments and two annulus
//! disks, prints a character map and the landmarks, and checks the
//! partition.

use echoiq::imaging::{Label, Spacing};
use echoiq::phantom::gen_default_chamber;
use echoiq::regions::{divide_regions, RegionId, View, ANNULUS_RADIUS_MM};

fn main() -> echoiq::Result<()> {
    let spacing = Spacing::new(0.4, 0.3)?;
    let mask = gen_default_chamber(View::A4c, 72, 72, spacing)?;
    let set = divide_regions(&mask, View::A4c, ANNULUS_RADIUS_MM)?;
    set.check_partition(&mask)?;

    let glyph = |r: usize, c: usize| {
        for (k, id) in RegionId::SEGMENTS.iter().enumerate() {
            if set.regions[id].mask.get(r, c) {
                return (b'1' + k as u8) as char;
            }
        }
        match mask.label(r, c) {
            Label::Lv => ' ',
            Label::La | Label::Ao => '~',
            _ if !mask.sector().get(r, c) => ':',
            _ => '.',
        }
    };
    for r in 0..mask.height() {
        println!(
            "{}",
            (0..mask.width()).map(|c| glyph(r, c)).collect::<String>()
        );
    }
    println!("segments 1-6: basal left .. basal right (image left to right)");
    let lm = &set.landmarks;
    println!("base {} {}  apex {}", lm.base_left, lm.base_right, lm.apex);
    for (id, region) in set.iter() {
        println!(
            "{:<14} {:>4} px  {:>5.1}% outside  excluded {}",
            id.as_str(),
            region.mask.count(),
            100.0 * region.outside_fraction(),
            region.excluded
        );
    }
    Ok(())
}
