//! Builds Vandermonde MDS matrices, encodes a batch and checks that a
//! chosen set of k columns of the generator is invertible.

use linesec::gf::{Field, SymbolMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = Field::gf256();
    let (k, n) = (3, 6);
    let g = f.make_mds(k, n)?;
    println!("{k} x {n} generator, MDS = {}", f.is_mds(&g)?);

    // three source symbols, six coded symbols
    let source = SymbolMatrix::from_rows(&[vec![17, 200, 3]])?;
    let coded = f.mat_mul(&source, &g)?;
    println!("coded: {:?}", coded.row(0));

    // keep columns 1, 4, 5 and invert the matching 3 x 3 block
    let kept = [1, 4, 5];
    let block = g.select_columns(&kept);
    println!("rank of the kept block: {}", f.rank(&block));
    for bits in [4, 16] {
        let big = Field::new(linesec::gf::FieldConfig::with_word_bits(bits)?)?;
        println!("GF(2^{bits}) allows at most {} columns", big.order() - 1);
    }
    Ok(())
}
