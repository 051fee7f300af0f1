//! Synthetic backbone construction from torsion angles.
//!
//! Used by tests, examples and benchmarks to produce ideal helices, strands
//! and hairpins without shipping coordinate files.

use crate::geom::{add, cross, normalize, scale, sub, Vec3};

use super::{aa, AnnotationDoc, AtomRecord, Chain, Complex, LoopInterval, Residue, ResidueRef, SourceFormat};

const N_CA: f64 = 1.458;
const CA_C: f64 = 1.525;
const C_N: f64 = 1.329;
const C_O: f64 = 1.231;
const ANG_N_CA_C: f64 = 111.2;
const ANG_CA_C_N: f64 = 116.2;
const ANG_C_N_CA: f64 = 121.7;
const ANG_CA_C_O: f64 = 120.5;

/// Places `d` given `a`, `b`, `c`, the `c`–`d` bond length, the `b`–`c`–`d`
/// angle and the `a`–`b`–`c`–`d` torsion (degrees).
pub fn place(a: Vec3, b: Vec3, c: Vec3, bond: f64, angle: f64, torsion: f64) -> Vec3 {
    let (ang, tor) = (angle.to_radians(), torsion.to_radians());
    let bc = normalize(sub(c, b));
    let n = normalize(cross(sub(b, a), bc));
    let m = cross(n, bc);
    let d2 = [
        -bond * ang.cos(),
        bond * ang.sin() * tor.cos(),
        bond * ang.sin() * tor.sin(),
    ];
    add(c, add(add(scale(bc, d2[0]), scale(m, d2[1])), scale(n, d2[2])))
}

/// Ideal Cβ from backbone N, CA, C.
pub fn ideal_cb(n: Vec3, ca: Vec3, c: Vec3) -> Vec3 {
    let b = sub(ca, n);
    let cc = sub(c, ca);
    let a = cross(b, cc);
    add(
        add(add(scale(a, -0.582_734_31), scale(b, 0.568_028_27)), scale(cc, -0.540_674_66)),
        ca,
    )
}

pub fn atom(name: &str, element: &str, pos: Vec3) -> AtomRecord {
    AtomRecord {
        name: name.to_string(),
        element: element.to_string(),
        pos,
        alt_loc: None,
        occupancy: 1.0,
    }
}

#[derive(Debug, Clone)]
pub struct ChainBuilder {
    chain_id: String,
    seq: Vec<char>,
    phi: Vec<f64>,
    psi: Vec<f64>,
    omega: f64,
    offset: Vec3,
    cb: bool,
}

impl ChainBuilder {
    pub fn new(chain_id: &str, seq: &str, phi: Vec<f64>, psi: Vec<f64>) -> Self {
        let seq: Vec<char> = seq.chars().collect();
        assert_eq!(seq.len(), phi.len());
        assert_eq!(seq.len(), psi.len());
        ChainBuilder {
            chain_id: chain_id.to_string(),
            seq,
            phi,
            psi,
            omega: 180.0,
            offset: [0.0; 3],
            cb: true,
        }
    }

    fn uniform(chain_id: &str, seq: &str, phi: f64, psi: f64) -> Self {
        let n = seq.chars().count();
        Self::new(chain_id, seq, vec![phi; n], vec![psi; n])
    }

    /// Right-handed α-helix (φ = −57°, ψ = −47°).
    pub fn helix(chain_id: &str, seq: &str) -> Self {
        Self::uniform(chain_id, seq, -57.0, -47.0)
    }

    /// β-strand geometry (φ = −139°, ψ = 135°).
    pub fn extended(chain_id: &str, seq: &str) -> Self {
        Self::uniform(chain_id, seq, -139.0, 135.0)
    }

    pub fn offset(mut self, v: Vec3) -> Self {
        self.offset = v;
        self
    }

    pub fn without_cb(mut self) -> Self {
        self.cb = false;
        self
    }

    pub fn build(&self) -> Chain {
        let n = self.seq.len();
        let mut bb: Vec<[Vec3; 4]> = Vec::with_capacity(n);
        let n0 = [0.0, 0.0, 0.0];
        let ca0 = [N_CA, 0.0, 0.0];
        let t = (180.0 - ANG_N_CA_C).to_radians();
        let c0 = add(ca0, [CA_C * t.cos(), CA_C * t.sin(), 0.0]);
        let mut prev = (n0, ca0, c0);
        for i in 0..n {
            let (ni, cai, ci) = if i == 0 {
                prev
            } else {
                let (pn, pca, pc) = prev;
                let ni = place(pn, pca, pc, C_N, ANG_CA_C_N, self.psi[i - 1]);
                let cai = place(pca, pc, ni, N_CA, ANG_C_N_CA, self.omega);
                let ci = place(pc, ni, cai, CA_C, ANG_N_CA_C, self.phi[i]);
                (ni, cai, ci)
            };
            // O is anti to the next N
            let next_n = place(ni, cai, ci, C_N, ANG_CA_C_N, self.psi[i]);
            let o = place(next_n, cai, ci, C_O, ANG_CA_C_O, 180.0);
            bb.push([ni, cai, ci, o]);
            prev = (ni, cai, ci);
        }
        let residues = bb
            .iter()
            .enumerate()
            .map(|(i, [ni, cai, ci, o])| {
                let code = self.seq[i];
                let mut atoms = vec![
                    atom("N", "N", add(*ni, self.offset)),
                    atom("CA", "C", add(*cai, self.offset)),
                    atom("C", "C", add(*ci, self.offset)),
                    atom("O", "O", add(*o, self.offset)),
                ];
                if self.cb && code != 'G' {
                    atoms.push(atom("CB", "C", add(ideal_cb(*ni, *cai, *ci), self.offset)));
                }
                Residue {
                    chain_id: self.chain_id.clone(),
                    pos: i + 1,
                    aa: code,
                    name: aa::one_to_three(code).to_string(),
                    auth_seq: (i + 1) as i32,
                    ins_code: None,
                    atoms,
                    complete_backbone: true,
                }
            })
            .collect();
        Chain {
            chain_id: self.chain_id.clone(),
            residues,
        }
    }
}

pub fn complex_from_chains(id: &str, chains: Vec<Chain>) -> Complex {
    let c = Complex {
        id: id.to_string(),
        source_format: SourceFormat::Pdb,
        chains,
    };
    c.validate().expect("synthetic complex must be valid");
    c
}

/// Toy antibody complex: heavy chain `H`, light chain `L` and antigen `A`
/// as three parallel helices about 9.5 Å apart, each `len` residues long
/// (at least 40). Sequences are drawn from `seed`. The annotation carries
/// six CDR loops, two antigen hotspots and an lDDT value.
pub fn synthetic_antibody(id: &str, seed: u64, len: usize) -> (Complex, AnnotationDoc) {
    use rand::Rng;
    assert!(len >= 40, "synthetic chains need at least 40 residues");
    let mut rng = crate::tasks::rng_from(seed);
    let mut seq = || -> String {
        (0..len)
            .map(|_| aa::STANDARD[rng.random_range(0..aa::STANDARD.len())])
            .collect()
    };
    let (h, l, a) = (seq(), seq(), seq());
    let complex = complex_from_chains(
        id,
        vec![
            ChainBuilder::helix("H", &h).build(),
            ChainBuilder::helix("L", &l).offset([9.5, 0.0, 0.0]).build(),
            ChainBuilder::helix("A", &a).offset([4.75, 8.2, 0.0]).build(),
        ],
    );
    let iv = |chain: &str, start, end| LoopInterval {
        chain: chain.to_string(),
        start,
        end,
    };
    let loops = [
        ("H1", iv("H", 6, 10)),
        ("H2", iv("H", 18, 23)),
        ("H3", iv("H", 28, 37)),
        ("L1", iv("L", 6, 11)),
        ("L2", iv("L", 18, 20)),
        ("L3", iv("L", 28, 35)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let hotspots = [12, 30]
        .into_iter()
        .map(|pos| ResidueRef {
            chain: "A".into(),
            pos,
        })
        .collect();
    let lddt = Some(0.45 + 0.5 * (seed % 100) as f64 / 100.0);
    (complex, AnnotationDoc { loops, hotspots, lddt })
}

/// Renders a complex as PDB ATOM records (first model only, no HETATM).
pub fn to_pdb_string(complex: &Complex) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<62}{:<4}\n", "HEADER    SYNTHETIC", complex.id));
    let mut serial = 1;
    for chain in &complex.chains {
        for r in &chain.residues {
            for a in &r.atoms {
                let name = if a.name.len() < 4 && a.element.len() == 1 {
                    format!(" {:<3}", a.name)
                } else {
                    format!("{:<4}", a.name)
                };
                out.push_str(&format!(
                    "ATOM  {:>5} {}{}{:>3} {}{:>4}{}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}\n",
                    serial % 100_000,
                    name,
                    a.alt_loc.unwrap_or(' '),
                    r.name,
                    chain.chain_id.chars().next().unwrap_or('A'),
                    r.auth_seq,
                    r.ins_code.unwrap_or(' '),
                    a.pos[0],
                    a.pos[1],
                    a.pos[2],
                    a.occupancy,
                    0.0,
                    a.element
                ));
                serial += 1;
            }
        }
        out.push_str("TER\n");
    }
    out.push_str("END\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{dihedral, dist};

    #[test]
    fn builder_reproduces_torsions_and_bonds() {
        let chain = ChainBuilder::helix("A", "AAAAAAAA").build();
        let r = &chain.residues;
        for i in 1..r.len() - 1 {
            let phi = dihedral(
                r[i - 1].atom_pos("C").unwrap(),
                r[i].atom_pos("N").unwrap(),
                r[i].atom_pos("CA").unwrap(),
                r[i].atom_pos("C").unwrap(),
            );
            let psi = dihedral(
                r[i].atom_pos("N").unwrap(),
                r[i].atom_pos("CA").unwrap(),
                r[i].atom_pos("C").unwrap(),
                r[i + 1].atom_pos("N").unwrap(),
            );
            assert!((phi + 57.0).abs() < 1e-6, "phi {phi}");
            assert!((psi + 47.0).abs() < 1e-6, "psi {psi}");
            let ca_ca = dist(r[i].atom_pos("CA").unwrap(), r[i + 1].atom_pos("CA").unwrap());
            assert!((ca_ca - 3.8).abs() < 0.05, "{ca_ca}");
        }
        let cb = r[2].atom_pos("CB").unwrap();
        assert!((dist(cb, r[2].atom_pos("CA").unwrap()) - 1.53).abs() < 0.03);
    }

    #[test]
    fn pdb_writer_round_trips_through_parser() {
        let c = complex_from_chains(
            "RT01",
            vec![
                ChainBuilder::helix("A", "ACDEFGHIK").build(),
                ChainBuilder::extended("B", "LMNPQ").offset([20.0, 0.0, 0.0]).build(),
            ],
        );
        let text = to_pdb_string(&c);
        let back = super::super::parse_structure(text.as_bytes(), SourceFormat::Pdb).unwrap();
        assert_eq!(back.id, "RT01");
        assert_eq!(back.chains.len(), 2);
        assert_eq!(back.chain("A").unwrap().sequence(), "ACDEFGHIK");
        let a = c.residue("B", 3).unwrap().atom_pos("CA").unwrap();
        let b = back.residue("B", 3).unwrap().atom_pos("CA").unwrap();
        assert!(dist(a, b) < 1e-3);
    }

    #[test]
    fn synthetic_antibody_covers_every_task() {
        use crate::tasks::corpus::{generate_corpus, CorpusSpec, StructureInput};
        use crate::tasks::TaskType;
        let inputs: Vec<StructureInput> = (0..3)
            .map(|k| {
                let (complex, doc) = synthetic_antibody(&format!("SYN{k}"), k, 48);
                StructureInput {
                    complex,
                    annotation: Some(doc),
                }
            })
            .collect();
        let spec = CorpusSpec {
            tasks: TaskType::ALL.to_vec(),
            ..CorpusSpec::for_stage(2, 5, 2)
        };
        let corpus = generate_corpus(&inputs, &spec).unwrap();
        let counts = corpus.counts();
        let missing: Vec<_> = TaskType::ALL.iter().filter(|t| !counts.contains_key(t)).collect();
        assert!(missing.is_empty(), "missing {missing:?}, skipped {:?}", corpus.skipped);
    }
}
