use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::{CategorySet, CorpusError, GroundTruth, Instruction, Product, TaskKind, UserRecord};
use crate::jsonl::read_records;

/// Loads a catalog using the default category set.
pub fn load_catalog(path: &Path) -> Result<Vec<Product>, CorpusError> {
    load_catalog_with(path, &CategorySet::default())
}

pub fn load_catalog_with(path: &Path, categories: &CategorySet) -> Result<Vec<Product>, CorpusError> {
    let products: Vec<Product> = read_records(path)?;
    let mut seen = HashSet::with_capacity(products.len());
    for p in &products {
        p.validate(categories)?;
        if !seen.insert(p.product_id.as_str()) {
            return Err(CorpusError::DuplicateProduct(p.product_id.clone()));
        }
    }
    Ok(products)
}

pub fn load_users(path: &Path, catalog: &[Product]) -> Result<Vec<UserRecord>, CorpusError> {
    let users: Vec<UserRecord> = read_records(path)?;
    let known: HashSet<&str> = catalog.iter().map(|p| p.product_id.as_str()).collect();
    let mut seen = HashSet::with_capacity(users.len());
    for user in &users {
        if !seen.insert(user.user_id.as_str()) {
            return Err(CorpusError::DuplicateUser(user.user_id.clone()));
        }
        for b in user.behaviors() {
            if !known.contains(b.product_id.as_str()) {
                return Err(CorpusError::DanglingProduct {
                    user_id: user.user_id.clone(),
                    product_id: b.product_id.clone(),
                });
            }
        }
        user.validate_order()?;
    }
    Ok(users)
}

pub fn load_instructions(
    path: &Path,
    catalog: &[Product],
    users: &[UserRecord],
) -> Result<Vec<Instruction>, CorpusError> {
    let instructions: Vec<Instruction> = read_records(path)?;
    validate_instructions(&instructions, catalog, users)?;
    Ok(instructions)
}

/// Referential integrity and ground-truth shape for a set of instructions.
pub fn validate_instructions(
    instructions: &[Instruction],
    catalog: &[Product],
    users: &[UserRecord],
) -> Result<(), CorpusError> {
    let products: HashSet<&str> = catalog.iter().map(|p| p.product_id.as_str()).collect();
    let user_ids: HashMap<&str, ()> = users.iter().map(|u| (u.user_id.as_str(), ())).collect();
    let mut seen = HashSet::with_capacity(instructions.len());
    for ins in instructions {
        let bad = |message: String| CorpusError::InvalidInstruction {
            instruction_id: ins.instruction_id.clone(),
            message,
        };
        if !seen.insert(ins.instruction_id.as_str()) {
            return Err(CorpusError::DuplicateInstruction(ins.instruction_id.clone()));
        }
        if !user_ids.contains_key(ins.user_id.as_str()) {
            return Err(bad(format!("unknown user {}", ins.user_id)));
        }
        match (&ins.ground_truth, ins.task_kind) {
            (GroundTruth::TargetProduct(id), TaskKind::Search | TaskKind::Recommendation) => {
                if !products.contains(id.as_str()) {
                    return Err(bad(format!("target product {id} not in catalog")));
                }
            }
            (GroundTruth::ReferenceReview(_), TaskKind::Review) => {}
            (_, kind) => {
                return Err(bad(format!("ground truth does not match task kind {kind}")));
            }
        }
    }
    Ok(())
}
