//! Four-token economy: fungible governance (GT) and utility (UT) balances,
//! unique NFTs, and soulbound tokens (SBT) that never leave their actor.
//!
//! [`TokenBook`] holds state only. Ledger anchoring of every mutation is done
//! by the engine, which calls into the book and appends in the same step.
//! Every operation validates fully before mutating, so an error leaves the
//! book untouched.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::digest::Digest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TokenType {
    GT,
    UT,
    NFT,
    SBT,
}

impl TokenType {
    pub fn is_fungible(self) -> bool {
        matches!(self, TokenType::GT | TokenType::UT)
    }
}

impl fmt::Display for TokenType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TokenType::GT => "GT",
            TokenType::UT => "UT",
            TokenType::NFT => "NFT",
            TokenType::SBT => "SBT",
        };
        f.write_str(s)
    }
}

impl FromStr for TokenType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "GT" => Ok(TokenType::GT),
            "UT" => Ok(TokenType::UT),
            "NFT" => Ok(TokenType::NFT),
            "SBT" => Ok(TokenType::SBT),
            _ => Err(format!("unknown token type {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenError {
    #[error("fungible amounts must be positive")]
    ZeroAmount,
    #[error("content {0} was already minted as evidence")]
    DuplicateContent(Digest),
    #[error("{actor} holds {held} {token}, needs {needed}")]
    InsufficientBalance { actor: String, token: TokenType, held: u64, needed: u64 },
    #[error("{actor} does not own asset {asset_id}")]
    NotOwner { actor: String, asset_id: String },
    #[error("soulbound tokens cannot be transferred")]
    SoulboundViolation,
    #[error("unknown asset {0}")]
    UnknownAsset(String),
    #[error("{0} is not a valid argument for this token type")]
    WrongTokenType(TokenType),
    #[error("balance overflow")]
    Overflow,
}

impl TokenError {
    pub fn code(&self) -> &'static str {
        match self {
            TokenError::ZeroAmount => "ZeroAmount",
            TokenError::DuplicateContent(_) => "DuplicateContent",
            TokenError::InsufficientBalance { .. } => "InsufficientBalance",
            TokenError::NotOwner { .. } => "NotOwner",
            TokenError::SoulboundViolation => "SoulboundViolation",
            TokenError::UnknownAsset(_) => "UnknownAsset",
            TokenError::WrongTokenType(_) => "WrongTokenType",
            TokenError::Overflow => "Overflow",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAccount {
    pub actor_id: String,
    pub gt_balance: u64,
    pub ut_balance: u64,
    pub nft_assets: BTreeSet<String>,
    pub sbt_assets: BTreeSet<String>,
}

impl TokenAccount {
    fn new(actor_id: &str) -> Self {
        TokenAccount { actor_id: actor_id.to_string(), ..Default::default() }
    }

    fn fungible_mut(&mut self, t: TokenType) -> &mut u64 {
        match t {
            TokenType::GT => &mut self.gt_balance,
            TokenType::UT => &mut self.ut_balance,
            _ => unreachable!("fungible_mut on {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenAsset {
    pub asset_id: String,
    pub token_type: TokenType,
    pub content_digest: Option<Digest>,
    /// Bound actor for SBTs; absent for NFTs.
    pub bound_actor: Option<String>,
    /// SBT only: whether the role required the bond.
    pub mandatory: bool,
    #[serde(default)]
    pub label: Option<String>,
}

/// What a mint creates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MintSpec {
    Amount(u64),
    Nft { content_digest: Option<Digest>, label: Option<String> },
    Sbt { label: String, mandatory: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MintReceipt {
    pub token_type: TokenType,
    pub recipient: String,
    pub amount: Option<u64>,
    pub asset_id: Option<String>,
    pub content_digest: Option<Digest>,
}

/// Amount for fungibles, asset id for NFT/SBT.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferSpec {
    Amount(u64),
    Asset(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferReceipt {
    pub token_type: TokenType,
    pub from: String,
    pub to: String,
    pub amount: Option<u64>,
    pub asset_id: Option<String>,
}

/// Holdings as reported by [`TokenBook::balance`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Holding {
    Amount(u64),
    Assets(BTreeSet<String>),
}

/// All token state. Serializes to the canonical token snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBook {
    accounts: BTreeMap<String, TokenAccount>,
    assets: BTreeMap<String, TokenAsset>,
    /// asset id -> current owner (NFT) or bound actor (SBT)
    owners: BTreeMap<String, String>,
    evidence_index: BTreeMap<Digest, String>,
    next_nft: u64,
    next_sbt: u64,
    minted_gt: u64,
    minted_ut: u64,
}

impl TokenBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn account(&self, actor: &str) -> Option<&TokenAccount> {
        self.accounts.get(actor)
    }

    pub fn accounts(&self) -> impl Iterator<Item = &TokenAccount> {
        self.accounts.values()
    }

    pub fn asset(&self, asset_id: &str) -> Option<&TokenAsset> {
        self.assets.get(asset_id)
    }

    pub fn assets(&self) -> impl Iterator<Item = &TokenAsset> {
        self.assets.values()
    }

    pub fn owner_of(&self, asset_id: &str) -> Option<&str> {
        self.owners.get(asset_id).map(String::as_str)
    }

    pub fn asset_for_content(&self, digest: &Digest) -> Option<&str> {
        self.evidence_index.get(digest).map(String::as_str)
    }

    /// Total ever minted for a fungible type; equals the sum of balances.
    pub fn minted_total(&self, t: TokenType) -> u64 {
        match t {
            TokenType::GT => self.minted_gt,
            TokenType::UT => self.minted_ut,
            _ => self.assets.values().filter(|a| a.token_type == t).count() as u64,
        }
    }

    pub fn total_supply(&self, t: TokenType) -> u64 {
        self.accounts
            .values()
            .map(|a| match t {
                TokenType::GT => a.gt_balance,
                TokenType::UT => a.ut_balance,
                TokenType::NFT => a.nft_assets.len() as u64,
                TokenType::SBT => a.sbt_assets.len() as u64,
            })
            .sum()
    }

    pub fn gt_balance(&self, actor: &str) -> u64 {
        self.accounts.get(actor).map_or(0, |a| a.gt_balance)
    }

    pub fn ut_balance(&self, actor: &str) -> u64 {
        self.accounts.get(actor).map_or(0, |a| a.ut_balance)
    }

    /// Current holdings; unknown actors read as zero or empty.
    pub fn balance(&self, actor: &str, t: TokenType) -> Holding {
        let acct = self.accounts.get(actor);
        match t {
            TokenType::GT => Holding::Amount(acct.map_or(0, |a| a.gt_balance)),
            TokenType::UT => Holding::Amount(acct.map_or(0, |a| a.ut_balance)),
            TokenType::NFT => Holding::Assets(acct.map(|a| a.nft_assets.clone()).unwrap_or_default()),
            TokenType::SBT => Holding::Assets(acct.map(|a| a.sbt_assets.clone()).unwrap_or_default()),
        }
    }

    /// Snapshot of positive GT balances.
    pub fn gt_holders(&self) -> BTreeMap<String, u64> {
        self.accounts
            .values()
            .filter(|a| a.gt_balance > 0)
            .map(|a| (a.actor_id.clone(), a.gt_balance))
            .collect()
    }

    /// Check a mint without applying it.
    pub fn check_mint(&self, t: TokenType, recipient: &str, spec: &MintSpec) -> Result<(), TokenError> {
        match (t, spec) {
            (TokenType::GT | TokenType::UT, MintSpec::Amount(0)) => Err(TokenError::ZeroAmount),
            (TokenType::GT | TokenType::UT, MintSpec::Amount(n)) => {
                let held = self.accounts.get(recipient).map_or(0, |a| if t == TokenType::GT { a.gt_balance } else { a.ut_balance });
                let minted = self.minted_total(t);
                held.checked_add(*n).and(minted.checked_add(*n)).map(|_| ()).ok_or(TokenError::Overflow)
            }
            (TokenType::NFT, MintSpec::Nft { content_digest, .. }) => match content_digest {
                Some(d) if self.evidence_index.contains_key(d) => Err(TokenError::DuplicateContent(*d)),
                _ => Ok(()),
            },
            (TokenType::SBT, MintSpec::Sbt { .. }) => Ok(()),
            _ => Err(TokenError::WrongTokenType(t)),
        }
    }

    pub fn mint(&mut self, t: TokenType, recipient: &str, spec: MintSpec) -> Result<MintReceipt, TokenError> {
        self.check_mint(t, recipient, &spec)?;
        let acct = self.accounts.entry(recipient.to_string()).or_insert_with(|| TokenAccount::new(recipient));
        let mut receipt =
            MintReceipt { token_type: t, recipient: recipient.to_string(), amount: None, asset_id: None, content_digest: None };
        match spec {
            MintSpec::Amount(n) => {
                *acct.fungible_mut(t) += n;
                match t {
                    TokenType::GT => self.minted_gt += n,
                    _ => self.minted_ut += n,
                }
                receipt.amount = Some(n);
            }
            MintSpec::Nft { content_digest, label } => {
                self.next_nft += 1;
                let id = format!("nft-{:04}", self.next_nft);
                acct.nft_assets.insert(id.clone());
                if let Some(d) = content_digest {
                    self.evidence_index.insert(d, id.clone());
                }
                self.owners.insert(id.clone(), recipient.to_string());
                self.assets.insert(
                    id.clone(),
                    TokenAsset {
                        asset_id: id.clone(),
                        token_type: TokenType::NFT,
                        content_digest,
                        bound_actor: None,
                        mandatory: false,
                        label,
                    },
                );
                receipt.asset_id = Some(id);
                receipt.content_digest = content_digest;
            }
            MintSpec::Sbt { label, mandatory } => {
                self.next_sbt += 1;
                let id = format!("sbt-{:04}", self.next_sbt);
                acct.sbt_assets.insert(id.clone());
                self.owners.insert(id.clone(), recipient.to_string());
                self.assets.insert(
                    id.clone(),
                    TokenAsset {
                        asset_id: id.clone(),
                        token_type: TokenType::SBT,
                        content_digest: None,
                        bound_actor: Some(recipient.to_string()),
                        mandatory,
                        label: Some(label),
                    },
                );
                receipt.asset_id = Some(id);
            }
        }
        Ok(receipt)
    }

    /// Check a transfer without applying it.
    pub fn check_transfer(&self, t: TokenType, from: &str, to: &str, spec: &TransferSpec) -> Result<(), TokenError> {
        let _ = to;
        match (t, spec) {
            (TokenType::SBT, _) => Err(TokenError::SoulboundViolation),
            (TokenType::GT | TokenType::UT, TransferSpec::Amount(n)) => {
                if *n == 0 {
                    return Err(TokenError::ZeroAmount);
                }
                let held = self.accounts.get(from).map_or(0, |a| if t == TokenType::GT { a.gt_balance } else { a.ut_balance });
                if held < *n {
                    return Err(TokenError::InsufficientBalance { actor: from.to_string(), token: t, held, needed: *n });
                }
                Ok(())
            }
            (TokenType::NFT, TransferSpec::Asset(id)) => {
                let asset = self.assets.get(id).ok_or_else(|| TokenError::UnknownAsset(id.clone()))?;
                if asset.token_type == TokenType::SBT {
                    return Err(TokenError::SoulboundViolation);
                }
                if self.owners.get(id).map(String::as_str) != Some(from) {
                    return Err(TokenError::NotOwner { actor: from.to_string(), asset_id: id.clone() });
                }
                Ok(())
            }
            _ => Err(TokenError::WrongTokenType(t)),
        }
    }

    pub fn transfer(&mut self, t: TokenType, from: &str, to: &str, spec: TransferSpec) -> Result<TransferReceipt, TokenError> {
        self.check_transfer(t, from, to, &spec)?;
        let mut receipt =
            TransferReceipt { token_type: t, from: from.to_string(), to: to.to_string(), amount: None, asset_id: None };
        match spec {
            TransferSpec::Amount(n) => {
                receipt.amount = Some(n);
                if from != to {
                    *self.accounts.get_mut(from).expect("checked").fungible_mut(t) -= n;
                    let dest = self.accounts.entry(to.to_string()).or_insert_with(|| TokenAccount::new(to));
                    *dest.fungible_mut(t) += n;
                }
            }
            TransferSpec::Asset(id) => {
                if from != to {
                    self.accounts.get_mut(from).expect("checked").nft_assets.remove(&id);
                    let dest = self.accounts.entry(to.to_string()).or_insert_with(|| TokenAccount::new(to));
                    dest.nft_assets.insert(id.clone());
                    self.owners.insert(id.clone(), to.to_string());
                }
                receipt.asset_id = Some(id);
            }
        }
        Ok(receipt)
    }

    /// Canonical JSON snapshot of accounts and assets.
    pub fn snapshot_json(&self) -> serde_json::Value {
        serde_json::json!({
            "accounts": self.accounts,
            "assets": self.assets,
        })
    }
}
