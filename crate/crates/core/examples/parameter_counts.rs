//! Trainable parameters of the published-scale and desk-scale models.

use heatcast::models::{default_configs, desk_configs, layout_size};

fn main() -> heatcast::Result<()> {
    for (label, (lstm, f, fp)) in [("published scale", default_configs()), ("desk scale", desk_configs())] {
        let f_specs = f.param_specs()?;
        let f_total = layout_size(&f_specs);
        let first = f_specs
            .iter()
            .filter(|s| s.name.starts_with("dense0."))
            .map(|s| s.numel())
            .sum::<usize>();
        let fp_total = fp.parameter_count()?;
        println!("{label}:");
        println!("  lstm    {:>12}", lstm.parameter_count());
        println!("  f       {f_total:>12}  ({:.1}% in the first dense layer)", 100.0 * first as f64 / f_total as f64);
        println!("  fprime  {fp_total:>12}  ({:.1}% of f)", 100.0 * fp_total as f64 / f_total as f64);
    }
    Ok(())
}
