//! Element table for the supported SMILES subset: periods 1-4 plus iodine.

use std::fmt;

/// Chemical element identified by atomic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(u8);

struct ElementData {
    symbol: &'static str,
    weight: f64,
    period: u8,
    /// Valence electrons for main-group elements, `None` for transition metals.
    valence_electrons: Option<u8>,
}

macro_rules! el {
    ($sym:literal, $w:expr, $p:expr, $ve:expr) => {
        ElementData {
            symbol: $sym,
            weight: $w,
            period: $p,
            valence_electrons: $ve,
        }
    };
}

// Index is atomic number - 1 for Z in 1..=36. Iodine is handled separately.
const TABLE: [ElementData; 36] = [
    el!("H", 1.008, 1, Some(1)),
    el!("He", 4.0026, 1, Some(8)),
    el!("Li", 6.94, 2, Some(1)),
    el!("Be", 9.0122, 2, Some(2)),
    el!("B", 10.81, 2, Some(3)),
    el!("C", 12.011, 2, Some(4)),
    el!("N", 14.007, 2, Some(5)),
    el!("O", 15.999, 2, Some(6)),
    el!("F", 18.998, 2, Some(7)),
    el!("Ne", 20.180, 2, Some(8)),
    el!("Na", 22.990, 3, Some(1)),
    el!("Mg", 24.305, 3, Some(2)),
    el!("Al", 26.982, 3, Some(3)),
    el!("Si", 28.085, 3, Some(4)),
    el!("P", 30.974, 3, Some(5)),
    el!("S", 32.06, 3, Some(6)),
    el!("Cl", 35.45, 3, Some(7)),
    el!("Ar", 39.948, 3, Some(8)),
    el!("K", 39.098, 4, Some(1)),
    el!("Ca", 40.078, 4, Some(2)),
    el!("Sc", 44.956, 4, None),
    el!("Ti", 47.867, 4, None),
    el!("V", 50.942, 4, None),
    el!("Cr", 51.996, 4, None),
    el!("Mn", 54.938, 4, None),
    el!("Fe", 55.845, 4, None),
    el!("Co", 58.933, 4, None),
    el!("Ni", 58.693, 4, None),
    el!("Cu", 63.546, 4, None),
    el!("Zn", 65.38, 4, None),
    el!("Ga", 69.723, 4, Some(3)),
    el!("Ge", 72.630, 4, Some(4)),
    el!("As", 74.922, 4, Some(5)),
    el!("Se", 78.971, 4, Some(6)),
    el!("Br", 79.904, 4, Some(7)),
    el!("Kr", 83.798, 4, Some(8)),
];

const IODINE: ElementData = el!("I", 126.904, 5, Some(7));

impl Element {
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        match z {
            1..=36 | 53 => Some(Element(z)),
            _ => None,
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Element> {
        if symbol == "I" {
            return Some(Element::I);
        }
        TABLE
            .iter()
            .position(|d| d.symbol == symbol)
            .map(|i| Element(i as u8 + 1))
    }

    fn data(self) -> &'static ElementData {
        if self.0 == 53 {
            &IODINE
        } else {
            &TABLE[self.0 as usize - 1]
        }
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        self.data().symbol
    }

    /// Standard atomic weight in g/mol.
    pub fn atomic_weight(self) -> f64 {
        self.data().weight
    }

    pub fn period(self) -> u8 {
        self.data().period
    }

    /// Elements that may be written without brackets.
    pub fn is_organic_subset(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
    }

    /// Elements that may carry an aromatic flag.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16)
    }

    /// Allowed total valences (bond orders plus hydrogens), ascending.
    ///
    /// Main-group atoms use the valence of the isoelectronic neutral atom:
    /// a cationic nitrogen behaves like carbon, an anionic oxygen like a
    /// halogen. Period 3+ pnictogens and chalcogens get their expanded
    /// octets. Transition metals accept anything up to 8.
    pub fn allowed_valences(self, charge: i8) -> &'static [u8] {
        if self == Element::H {
            return if charge == 0 { &[1] } else { &[0] };
        }
        let Some(ve) = self.data().valence_electrons else {
            return &[0, 1, 2, 3, 4, 5, 6, 7, 8];
        };
        let effective = ve as i16 - charge as i16;
        let expanded = self.period() >= 3;
        match effective {
            i16::MIN..=0 => &[0],
            1 => &[1],
            2 => &[2],
            3 => &[3],
            4 => &[4],
            5 if expanded => &[3, 5],
            5 => &[3],
            6 if expanded => &[2, 4, 6],
            6 => &[2],
            7 => &[1],
            _ => &[0],
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valence_table_defaults() {
        assert_eq!(Element::B.allowed_valences(0), &[3]);
        assert_eq!(Element::C.allowed_valences(0), &[4]);
        assert_eq!(Element::N.allowed_valences(0), &[3]);
        assert_eq!(Element::N.allowed_valences(1), &[4]);
        assert_eq!(Element::N.allowed_valences(-1), &[2]);
        assert_eq!(Element::O.allowed_valences(0), &[2]);
        assert_eq!(Element::O.allowed_valences(-1), &[1]);
        assert_eq!(Element::P.allowed_valences(0), &[3, 5]);
        assert_eq!(Element::S.allowed_valences(0), &[2, 4, 6]);
        for hal in [Element::F, Element::CL, Element::BR, Element::I] {
            assert_eq!(hal.allowed_valences(0), &[1]);
        }
        assert_eq!(Element::H.allowed_valences(0), &[1]);
    }

    #[test]
    fn table_is_total() {
        for z in (1..=36).chain([53]) {
            let el = Element::from_atomic_number(z).unwrap();
            assert_eq!(Element::from_symbol(el.symbol()), Some(el));
            for charge in -15..=15 {
                assert!(!el.allowed_valences(charge).is_empty());
            }
        }
        assert!(Element::from_atomic_number(54).is_none());
        assert!(Element::from_symbol("Xe").is_none());
    }
}
