//! Enumerate a two-cavity basis with one cascade dopant and show the ladder
//! operators acting on it.

use crowgate::fock::{annihilation_op, creation_op, enumerate_basis, DopantLevelSet, ModeSet, StateVector};

fn main() -> crowgate::Result<()> {
    let basis = enumerate_basis(ModeSet::new(2, 2)?, &[DopantLevelSet::cascade()])?;
    println!("dimension {}", basis.dimension());
    for (k, s) in basis.states().iter().enumerate() {
        println!("{k:>3}  {s:<10} photons {}  excitations {}", s.photons(), basis.excitations(k));
    }

    let vacuum = StateVector::from_labels(&basis, &[0, 0], &[crowgate::fock::Level::G])?;
    let a0_dag = creation_op(&basis, 0)?;
    let two = a0_dag.apply(&a0_dag.apply(&vacuum)?)?;
    println!("‖(a₀†)²|g;00⟩‖² = {:.6}", two.norm_sqr());
    let back = annihilation_op(&basis, 0)?.apply(&two)?;
    println!("‖a₀ (a₀†)²|g;00⟩‖² = {:.6}", back.norm_sqr());
    Ok(())
}
