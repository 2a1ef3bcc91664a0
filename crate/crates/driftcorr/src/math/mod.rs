pub mod eigen;
pub mod normal;
pub mod quadrature;
