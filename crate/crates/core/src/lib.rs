//! Core of the EtherVote election system: a simulated append-only ledger,
//! identity commitments, the election contract state machine and the
//! off-chain OTP delivery gateway.

pub mod audit;
pub mod clock;
pub mod codec;
pub mod contract;
pub mod gateway;
pub mod identity;
pub mod ledger;
#[cfg(feature = "simulation")]
pub mod sim;
pub mod types;

pub use clock::{Clock, ManualClock, SystemClock};
pub use contract::{
    Candidate, Contract, ContractError, ElectionConfig, ElectionPhase, TallySnapshot, TxReceipt,
    VoteReceiptView, VoterRecord, VoterStatus,
};
pub use gateway::{DeliveryReceipt, GatewayError, MockTransport, OtpGateway, OtpTransport};
pub use identity::{IdentityCommitment, IdentityError, PersonalData};
pub use ledger::{
    Account, AccountSecret, Block, BlockRef, Ledger, LedgerError, TransactionRecord, TxKind,
    VerificationReport,
};
pub use types::{Address, ParseHexError, Timestamp, H256};
