//! Demo data for UI walkthroughs: one admin, two applicants, one company and
//! three certificates taken through the full anchoring pipeline. The company
//! holds a grant on the first certificate only.

use serde::Serialize;

use super::{AccessDecision, Caller, Decision, Platform, Result};
use crate::crypto::Role;

pub const DEMO_PASSWORD: &str = "demo-password";

#[derive(Debug, Clone, Serialize)]
pub struct DemoCertificate {
    pub certificate_id: String,
    pub applicant_id: String,
    pub title: String,
    pub share_code: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoSeed {
    pub admin_id: String,
    pub admin_password: String,
    pub applicant_ids: Vec<String>,
    pub company_id: String,
    /// Password shared by the applicant and company accounts.
    pub password: String,
    pub certificates: Vec<DemoCertificate>,
    /// Share code the company has been granted access to.
    pub granted_share_code: String,
}

pub fn seed_demo(platform: &mut Platform) -> Result<DemoSeed> {
    let (admin_view, admin_password) = platform.create_admin("demo-admin", "Demo Admin")?;
    platform.register_user("demo-alice", Role::Applicant, "Alice Example", DEMO_PASSWORD)?;
    platform.register_user("demo-bob", Role::Applicant, "Bob Example", DEMO_PASSWORD)?;
    platform.register_user("demo-company", Role::Company, "Acme Hiring", DEMO_PASSWORD)?;

    let admin = Caller {
        user_id: admin_view.user_id.clone(),
        role: Role::Admin,
    };
    let company = Caller {
        user_id: "demo-company".into(),
        role: Role::Company,
    };
    let alice = Caller {
        user_id: "demo-alice".into(),
        role: Role::Applicant,
    };
    let bob = Caller {
        user_id: "demo-bob".into(),
        role: Role::Applicant,
    };

    let plan = [
        (&alice, "B.Sc. Computer Science", "Example University"),
        (&alice, "First Aid Certificate", "Red Cross"),
        (&bob, "M.A. History", "Sample College"),
    ];
    let mut certificates = Vec::new();
    for (applicant, title, issuer) in plan {
        let body = format!("%PDF-1.4\n% demo certificate: {title}, issued by {issuer} to {}\n", applicant.user_id);
        let receipt = platform.upload_certificate(applicant, title, issuer, body.into_bytes())?;
        platform.admin_claim(&admin, &receipt.certificate_id)?;
        let view = platform.admin_decide(&admin, &receipt.certificate_id, Decision::Approve, "confirmed with issuer", true)?;
        certificates.push(DemoCertificate {
            certificate_id: receipt.certificate_id,
            applicant_id: applicant.user_id.clone(),
            title: title.into(),
            share_code: view.share_code.expect("approved certificate has a share code").to_hex(),
        });
    }

    let granted = certificates[0].share_code.clone();
    let request = platform.request_access(&company, &granted)?;
    platform.decide_access(&alice, &request.request_id, AccessDecision::Grant)?;

    Ok(DemoSeed {
        admin_id: admin_view.user_id,
        admin_password,
        applicant_ids: vec![alice.user_id, bob.user_id],
        company_id: company.user_id,
        password: DEMO_PASSWORD.into(),
        certificates,
        granted_share_code: granted,
    })
}
