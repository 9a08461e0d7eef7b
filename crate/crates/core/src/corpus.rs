//! Bundled example modules, drivers and specifications.

use crate::assertion::Spec;
use crate::ast::{ModuleDef, Stmt};
use crate::checker::Status;
use crate::syntax::{parse_module, parse_spec, parse_stmts, ParseError};

/// One bundled check: internal and external module sources, a driver, a
/// spec and the verdict the run is expected to produce.
#[derive(Clone, Copy, Debug)]
pub struct Exemplar {
    pub name: &'static str,
    pub description: &'static str,
    pub internal: &'static str,
    pub external: &'static str,
    pub driver: &'static str,
    pub spec: &'static str,
    pub expected: Status,
}

pub struct Parsed {
    pub internal: ModuleDef,
    pub external: ModuleDef,
    pub driver: Vec<Stmt>,
    pub spec: Spec,
}

impl Exemplar {
    pub fn parse(&self) -> Result<Parsed, ParseError> {
        Ok(Parsed {
            internal: parse_module(self.internal)?,
            external: parse_module(self.external)?,
            driver: parse_stmts(self.driver)?,
            spec: parse_spec(self.spec)?,
        })
    }
}

macro_rules! files {
    ($($name:literal),* $(,)?) => {
        /// Raw corpus files by file name.
        pub const FILES: &[(&str, &str)] = &[$(($name, include_str!(concat!("../corpus/", $name)))),*];
    };
}

files!(
    "safe_v1.loo",
    "safe_v2.loo",
    "safe_clients.loo",
    "safe.cmail",
    "safe_thief.drv",
    "safe_lockpick.drv",
    "bank_v1.loo",
    "bank_v1_drain.loo",
    "bank_v2.loo",
    "bank_clients.loo",
    "bank.cmail",
    "bank_transfer.drv",
    "bank_v2_transfer.drv",
    "bank_drain.drv",
    "bank_make_account.drv",
    "bank_clients_run.drv",
    "bank_sigma1.json",
    "bank_sigma2.json",
    "bank_sigma4.json",
    "bank_sigma5.json",
    "dom.loo",
    "dom_leaky.loo",
    "dom_clients.loo",
    "dom.cmail",
    "dom_polite.drv",
    "dom_sneaky.drv",
    "token.loo",
    "token_levy.loo",
    "token_clients.loo",
    "token.cmail",
    "token_honest.drv",
    "token_levy.drv",
    "dao.loo",
    "dao.cmail",
    "dao_honest.drv",
    "dao_drain.drv",
);

/// Contents of a corpus file. Panics on an unknown name.
pub fn file(name: &str) -> &'static str {
    FILES.iter().find(|(n, _)| *n == name).map(|(_, c)| *c).unwrap_or_else(|| panic!("no corpus file {name}"))
}

const EMPTY: &str = "";

pub fn exemplars() -> Vec<Exemplar> {
    use Status::*;
    let f = file;
    vec![
        Exemplar {
            name: "safe-v1-thief",
            description: "safe without a setter; a client guessing the secret cannot take the treasure",
            internal: f("safe_v1.loo"),
            external: f("safe_clients.loo"),
            driver: f("safe_thief.drv"),
            spec: f("safe.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "safe-v2-thief",
            description: "safe with a setter, same guessing client",
            internal: f("safe_v2.loo"),
            external: f("safe_clients.loo"),
            driver: f("safe_thief.drv"),
            spec: f("safe.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "safe-v2-lockpick",
            description: "safe with a setter; the client replaces the secret, then takes the treasure",
            internal: f("safe_v2.loo"),
            external: f("safe_clients.loo"),
            driver: f("safe_lockpick.drv"),
            spec: f("safe.cmail"),
            expected: Violated,
        },
        Exemplar {
            name: "bank-v1-transfer",
            description: "balances in accounts, two deposits",
            internal: f("bank_v1.loo"),
            external: f("bank_clients.loo"),
            driver: f("bank_transfer.drv"),
            spec: f("bank.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "bank-v1-drain",
            description: "an extra drain method moves money without a deposit",
            internal: f("bank_v1_drain.loo"),
            external: f("bank_clients.loo"),
            driver: f("bank_drain.drv"),
            spec: f("bank.cmail"),
            expected: Violated,
        },
        Exemplar {
            name: "bank-v1-make-account",
            description: "makeAccount funds a new account through an internal deposit",
            internal: f("bank_v1.loo"),
            external: f("bank_clients.loo"),
            driver: f("bank_make_account.drv"),
            spec: f("bank.cmail"),
            expected: Violated,
        },
        Exemplar {
            name: "bank-v1-clients",
            description: "a client obtains an account from a friend and deposits from it",
            internal: f("bank_v1.loo"),
            external: f("bank_clients.loo"),
            driver: f("bank_clients_run.drv"),
            spec: f("bank.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "bank-v2-transfer",
            description: "balances in a ledger owned by the bank, two deposits",
            internal: f("bank_v2.loo"),
            external: f("bank_clients.loo"),
            driver: f("bank_v2_transfer.drv"),
            spec: f("bank.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "dom-polite",
            description: "wrapper of height 1; the client modifies the parent through the wrapper",
            internal: f("dom.loo"),
            external: f("dom_clients.loo"),
            driver: f("dom_polite.drv"),
            spec: f("dom.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "dom-sneaky",
            description: "wrapper without getNode; the sneaky client gets stuck",
            internal: f("dom.loo"),
            external: f("dom_clients.loo"),
            driver: f("dom_sneaky.drv"),
            spec: f("dom.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "dom-leaky-polite",
            description: "leaky wrapper, client that does not use the leak",
            internal: f("dom_leaky.loo"),
            external: f("dom_clients.loo"),
            driver: f("dom_polite.drv"),
            spec: f("dom.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "dom-leaky-sneaky",
            description: "leaky wrapper; the client climbs past the wrapper's scope",
            internal: f("dom_leaky.loo"),
            external: f("dom_clients.loo"),
            driver: f("dom_sneaky.drv"),
            spec: f("dom.cmail"),
            expected: Violated,
        },
        Exemplar {
            name: "token-honest",
            description: "transfers and allowance spends, direct and through a holder",
            internal: f("token.loo"),
            external: f("token_clients.loo"),
            driver: f("token_honest.drv"),
            spec: f("token.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "token-levy",
            description: "the token debits a wallet without a transfer",
            internal: f("token_levy.loo"),
            external: f("token_clients.loo"),
            driver: f("token_levy.drv"),
            spec: f("token.cmail"),
            expected: Violated,
        },
        Exemplar {
            name: "dao-honest",
            description: "two members join, one repays",
            internal: f("dao.loo"),
            external: EMPTY,
            driver: f("dao_honest.drv"),
            spec: f("dao.cmail"),
            expected: NoViolationFound,
        },
        Exemplar {
            name: "dao-drain",
            description: "release is called directly for more than one member's share",
            internal: f("dao.loo"),
            external: EMPTY,
            driver: f("dao_drain.drv"),
            spec: f("dao.cmail"),
            expected: Violated,
        },
    ]
}

pub fn exemplar(name: &str) -> Option<Exemplar> {
    exemplars().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_file_parses() {
        for (name, src) in FILES {
            let r = match name.rsplit('.').next() {
                Some("loo") => parse_module(src).map(drop),
                Some("drv") => parse_stmts(src).map(drop),
                Some("cmail") => parse_spec(src).map(drop),
                Some("json") => {
                    crate::dump::config_from_str(src).unwrap_or_else(|e| panic!("{name}: {e}"));
                    Ok(())
                }
                _ => panic!("unexpected corpus file {name}"),
            };
            r.unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = exemplars().iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), exemplars().len());
    }
}
