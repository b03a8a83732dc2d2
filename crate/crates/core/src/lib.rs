pub mod abelian;
pub mod algebra;
pub mod chain;
pub mod detline;
pub mod doc;
pub mod error;
pub mod fk;
pub mod linalg;
pub mod module;
pub mod torsion;
pub mod wedderburn;
