use super::config::ScriptOp;
use crate::bank::{BankError, BanknotePrint, Economy, Pins, TransactionRequest};
use crate::model::AccountId;

fn account(e: &Economy, party: &str) -> Result<AccountId, BankError> {
    Ok(e.account_of(party).ok_or_else(|| crate::privacy::PrivacyError::UnknownParty(party.to_string()))?)
}

pub(super) fn apply(e: &mut Economy, op: &ScriptOp) -> Result<(), BankError> {
    match op {
        ScriptOp::Seed { party, amount, at } => {
            let a = account(e, party)?;
            e.seed_money(a, *amount, *at)?;
        }
        ScriptOp::Transfer { payer, payee, amount, at, concept, concept_type, region, reference, statement } => {
            let req = TransactionRequest {
                payer: account(e, payer)?,
                payee: account(e, payee)?,
                amount: *amount,
                detailed_concept: concept.clone(),
                concept_type: concept_type.clone(),
                region: region.clone(),
                timestamp: *at,
                reference: reference.clone(),
                statement_reference: statement.clone(),
            };
            e.execute_transfer(req)?;
        }
        ScriptOp::Loan { bank, party, amount, at } => {
            let a = account(e, party)?;
            e.grant_loan(bank, a, *amount, *at)?;
        }
        ScriptOp::Repay { loan, amount, at } => {
            e.repay_loan(*loan, *amount, *at)?;
        }
        ScriptOp::Reserve { bank, direction, amount, at } => {
            e.reserve_move(bank, (*direction).into(), *amount, *at)?;
        }
        ScriptOp::CrossBorder { party, direction, amount, at } => {
            let a = account(e, party)?;
            e.cross_border((*direction).into(), a, *amount, *at)?;
        }
        ScriptOp::PrintBanknote { serial, denomination, reprint_at, print_at, reprint_reference, print_reference } => {
            e.print_banknote(BanknotePrint {
                serial: *serial,
                denomination: *denomination,
                reprint_at: *reprint_at,
                print_at: *print_at,
                reprint: Pins { primary: reprint_reference.clone(), statement: None },
                print: Pins { primary: print_reference.clone(), statement: None },
            })?;
        }
        ScriptOp::BanknoteDeposit { party, serial, at } => {
            let a = account(e, party)?;
            e.banknote_deposit(a, *serial, *at)?;
        }
        ScriptOp::BanknoteWithdraw { party, serial, at } => {
            let a = account(e, party)?;
            e.banknote_withdraw(a, *serial, *at)?;
        }
    }
    Ok(())
}
