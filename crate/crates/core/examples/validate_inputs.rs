//! Validation of hand-written input files, listing offending lines.

use std::fs;

use econet::io::{validate_file, Format};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("econet-validate-example");
    fs::create_dir_all(&dir)?;
    let files = [
        (
            "panel.csv",
            Format::Panel,
            "country,account,direction,year,value_usd\nDEU,goods,out,2010,1.2e12\nDEU,goods,out,2011,\nDEU,goods,out,2010,1.3e12\nFRA,bonds,in,2010,4\n",
        ),
        (
            "holdings.csv",
            Format::Edges,
            "source,target,year,value_usd\nUSA,DEU,2002,5e8\nDEU,USA,2002,-3\nDEU,DEU,2002,1\n",
        ),
        ("series.csv", Format::Series, "time,kind,label,value_usd\n2004-06,NOA,CDS-total,6.4e12\n2004-12,NOA,CDS-total,8.4e12\n"),
    ];
    for (name, format, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        let report = validate_file(&path, format)?;
        println!(
            "{name}: {} rows, {} missing cells, {} findings",
            report.rows,
            report.missing_cells,
            report.findings.len()
        );
        for f in &report.findings {
            println!("  line {}: {}", f.line, f.message);
        }
    }
    Ok(())
}
