//! Pixel intensity, CR, CNR and gCNR of a contrast phantom, next to the
//! values expected from its generating distributions.

use echoiq::imaging::{histogram, Label};
use echoiq::phantom::{gen_contrast_phantom, ContrastParams};
use echoiq::qmetrics::{cnr, contrast_ratio, gcnr, region_stats};

fn main() -> echoiq::Result<()> {
    let params = ContrastParams {
        roi_mean: 120.0,
        roi_std: 15.0,
        bg_mean: 40.0,
        bg_std: 15.0,
        pixels_per_region: 100_000,
    };
    let (img, mask) = gen_contrast_phantom(&params, 2024)?;
    let roi = mask.clipped_class_mask(Label::Myo);
    let bg = mask.clipped_class_mask(Label::Lv);
    let (rs, bs) = (region_stats(&img, &roi)?, region_stats(&img, &bg)?);

    println!(
        "ROI  mean {:.2} std {:.2} ({} px)",
        rs.mean, rs.std, rs.count
    );
    println!(
        "LV   mean {:.2} std {:.2} ({} px)",
        bs.mean, bs.std, bs.count
    );
    println!(
        "CR   {:.4}  expected {:.4}",
        contrast_ratio(&rs, &bs)?,
        params.expected_cr()
    );
    println!(
        "CNR  {:.4}  expected {:.4}",
        cnr(&rs, &bs)?,
        params.expected_cnr()
    );
    let g = gcnr(&histogram(&img, &roi)?, &histogram(&img, &bg)?);
    println!("gCNR {:.4}  expected {:.4}", g, params.expected_gcnr());
    Ok(())
}
