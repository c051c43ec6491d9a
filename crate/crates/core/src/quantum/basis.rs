use num_complex::Complex;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cartesian {
    X,
    Y,
    Z,
}

impl Cartesian {
    pub const ALL: [Cartesian; 3] = [Cartesian::X, Cartesian::Y, Cartesian::Z];

    fn index(self) -> usize {
        self as usize
    }

    fn letter(self) -> char {
        ['x', 'y', 'z'][self.index()]
    }

    fn parse(c: char) -> Option<Self> {
        match c {
            'x' => Some(Cartesian::X),
            'y' => Some(Cartesian::Y),
            'z' => Some(Cartesian::Z),
            _ => None,
        }
    }
}

/// Element of the orthonormal product-operator basis.
///
/// Index layout: `E/2 = 0`, `Ia = 1..=3`, `Sa = 4..=6`, `2IaSb = 7 + 3a + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProductOperator {
    Identity,
    I(Cartesian),
    S(Cartesian),
    IS(Cartesian, Cartesian),
}

impl ProductOperator {
    pub const DIM: usize = 16;

    pub fn index(self) -> usize {
        match self {
            ProductOperator::Identity => 0,
            ProductOperator::I(a) => 1 + a.index(),
            ProductOperator::S(b) => 4 + b.index(),
            ProductOperator::IS(a, b) => 7 + 3 * a.index() + b.index(),
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        let c = Cartesian::ALL;
        match i {
            0 => Some(ProductOperator::Identity),
            1..=3 => Some(ProductOperator::I(c[i - 1])),
            4..=6 => Some(ProductOperator::S(c[i - 4])),
            7..=15 => Some(ProductOperator::IS(c[(i - 7) / 3], c[(i - 7) % 3])),
            _ => None,
        }
    }

    pub fn all() -> impl Iterator<Item = ProductOperator> {
        (0..Self::DIM).filter_map(Self::from_index)
    }

    /// `"E/2"`, `"Ix"`, `"Sz"`, `"2IySz"`, ...
    pub fn label(self) -> String {
        match self {
            ProductOperator::Identity => "E/2".into(),
            ProductOperator::I(a) => format!("I{}", a.letter()),
            ProductOperator::S(b) => format!("S{}", b.letter()),
            ProductOperator::IS(a, b) => format!("2I{}S{}", a.letter(), b.letter()),
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        let chars: Vec<char> = label.trim().chars().collect();
        match chars.as_slice() {
            ['E', '/', '2'] => Some(ProductOperator::Identity),
            ['I', a] => Cartesian::parse(*a).map(ProductOperator::I),
            ['S', b] => Cartesian::parse(*b).map(ProductOperator::S),
            ['2', 'I', a, 'S', b] => Some(ProductOperator::IS(
                Cartesian::parse(*a)?,
                Cartesian::parse(*b)?,
            )),
            _ => None,
        }
    }

    /// The operator as a 4x4 matrix in the `|αα>, |αβ>, |βα>, |ββ>` basis.
    pub fn matrix<T: Real>(self) -> Op4<T> {
        let id = pauli::<T>(None);
        let half = T::lit(0.5);
        match self {
            ProductOperator::Identity => kron(&id, &id).scale(half),
            ProductOperator::I(a) => kron(&pauli(Some(a)), &id).scale(half),
            ProductOperator::S(b) => kron(&id, &pauli(Some(b))).scale(half),
            ProductOperator::IS(a, b) => kron(&pauli(Some(a)), &pauli(Some(b))).scale(half),
        }
    }
}

/// Complex 4x4 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Op4<T>(pub [[Complex<T>; 4]; 4]);

type Op2<T> = [[Complex<T>; 2]; 2];

fn pauli<T: Real>(axis: Option<Cartesian>) -> Op2<T> {
    let (o, z) = (T::one(), T::zero());
    let c = |re: T, im: T| Complex::new(re, im);
    match axis {
        None => [[c(o, z), c(z, z)], [c(z, z), c(o, z)]],
        Some(Cartesian::X) => [[c(z, z), c(o, z)], [c(o, z), c(z, z)]],
        Some(Cartesian::Y) => [[c(z, z), c(z, -o)], [c(z, o), c(z, z)]],
        Some(Cartesian::Z) => [[c(o, z), c(z, z)], [c(z, z), c(-o, z)]],
    }
}

fn kron<T: Real>(a: &Op2<T>, b: &Op2<T>) -> Op4<T> {
    let mut m = Op4::zero();
    for (i, ar) in a.iter().enumerate() {
        for (j, &aij) in ar.iter().enumerate() {
            for (k, br) in b.iter().enumerate() {
                for (l, &bkl) in br.iter().enumerate() {
                    m.0[2 * i + k][2 * j + l] = aij * bkl;
                }
            }
        }
    }
    m
}

impl<T: Real> Op4<T> {
    pub fn zero() -> Self {
        Op4([[Complex::new(T::zero(), T::zero()); 4]; 4])
    }

    pub fn scale(&self, s: T) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * s;
            }
        }
        m
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut m = *self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = m.0[i][j] + other.0[i][j];
            }
        }
        m
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..4 {
                    acc = acc + self.0[i][k] * other.0[k][j];
                }
                m.0[i][j] = acc;
            }
        }
        m
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self).scale(-T::one()))
    }

    /// `-i·self`.
    pub fn times_minus_i(&self) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for x in row.iter_mut() {
                *x = Complex::new(x.im, -x.re);
            }
        }
        m
    }

    /// `Tr(self · other)`.
    pub fn trace_product(&self, other: &Self) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..4 {
            for k in 0..4 {
                acc = acc + self.0[i][k] * other.0[k][i];
            }
        }
        acc
    }
}
