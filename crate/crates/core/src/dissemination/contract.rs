use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::foxml::extract_inline_xml;
use crate::model::{DigitalObject, Pid, Timestamp};
use crate::xml::{escape_attr, Node, Pull};

pub const METHODMAP: &str = "METHODMAP";
pub const SERVICEBINDINGS: &str = "SERVICEBINDINGS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub required: bool,
    pub default: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSignature {
    pub name: String,
    pub params: Vec<ParamSpec>,
}

/// Abstract methods declared by a behavior-definition object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BDefContract {
    pub pid: Pid,
    pub methods: Vec<MethodSignature>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceBinding {
    pub method: String,
    pub url_template: String,
    pub inputs: Vec<String>,
    pub mime_type: String,
}

/// Concrete service bindings declared by a behavior-mechanism object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BMechBinding {
    pub pid: Pid,
    pub bdef: Pid,
    pub bindings: Vec<ServiceBinding>,
}

fn bad(what: &str, msg: impl std::fmt::Display) -> Error {
    Error::SchemaViolation(format!("{what}: {msg}"))
}

fn parse_bool(v: Option<&str>) -> Result<bool> {
    match v {
        None | Some("false") => Ok(false),
        Some("true") => Ok(true),
        Some(other) => Err(bad(METHODMAP, format!("bad boolean {other:?}"))),
    }
}

/// Names of `{...}` placeholders in a URL template.
pub fn placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start..].find('}') else {
            break;
        };
        out.push(&rest[start + 1..start + len]);
        rest = &rest[start + len + 1..];
    }
    out
}

impl BDefContract {
    pub fn parse(pid: Pid, xml: &[u8]) -> Result<Self> {
        let mut pull = Pull::new(xml);
        let root = match pull.next_significant()? {
            Node::Open(el) if el.local == "methodMap" => el,
            _ => return Err(bad(METHODMAP, "root must be <methodMap>")),
        };
        let mut methods: Vec<MethodSignature> = Vec::new();
        if !root.empty {
            loop {
                match pull.next_significant()? {
                    Node::Open(m) if m.local == "method" => {
                        let name = m.require("name")?.to_string();
                        if methods.iter().any(|x| x.name == name) {
                            return Err(bad(METHODMAP, format!("method {name} declared twice")));
                        }
                        let mut params = Vec::new();
                        if !m.empty {
                            loop {
                                match pull.next_significant()? {
                                    Node::Open(p) if p.local == "param" => {
                                        params.push(ParamSpec {
                                            name: p.require("name")?.to_string(),
                                            required: parse_bool(p.attr("required"))?,
                                            default: p.attr("default").map(str::to_string),
                                        });
                                        if !p.empty {
                                            pull.skip(&p)?;
                                        }
                                    }
                                    Node::Close => break,
                                    _ => return Err(bad(METHODMAP, "unexpected content in <method>")),
                                }
                            }
                        }
                        methods.push(MethodSignature { name, params });
                    }
                    Node::Close => break,
                    _ => return Err(bad(METHODMAP, "unexpected content in <methodMap>")),
                }
            }
        }
        Ok(BDefContract { pid, methods })
    }

    /// Reads the METHODMAP datastream of a BDef object.
    pub fn from_object(obj: &DigitalObject, as_of: Option<Timestamp>) -> Result<Self> {
        if !obj.is_bdef() {
            return Err(Error::MissingDependency(format!("{} is not a behavior definition", obj.pid)));
        }
        let xml = extract_inline_xml(obj, METHODMAP, as_of)
            .map_err(|e| Error::MissingDependency(format!("{}: {e}", obj.pid)))?;
        Self::parse(obj.pid.clone(), &xml)
    }

    pub fn method(&self, name: &str) -> Option<&MethodSignature> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::from("<methodMap>\n");
        for m in &self.methods {
            out.push_str(&format!("  <method name=\"{}\">\n", escape_attr(&m.name)));
            for p in &m.params {
                out.push_str(&format!(
                    "    <param name=\"{}\" required=\"{}\"",
                    escape_attr(&p.name),
                    p.required
                ));
                if let Some(d) = &p.default {
                    out.push_str(&format!(" default=\"{}\"", escape_attr(d)));
                }
                out.push_str("/>\n");
            }
            out.push_str("  </method>\n");
        }
        out.push_str("</methodMap>");
        out
    }
}

impl BMechBinding {
    pub fn parse(pid: Pid, xml: &[u8]) -> Result<Self> {
        let mut pull = Pull::new(xml);
        let root = match pull.next_significant()? {
            Node::Open(el) if el.local == "serviceBindings" => el,
            _ => return Err(bad(SERVICEBINDINGS, "root must be <serviceBindings>")),
        };
        let bdef = Pid::parse(root.require("bdef")?)?;
        let mut bindings: Vec<ServiceBinding> = Vec::new();
        if !root.empty {
            loop {
                match pull.next_significant()? {
                    Node::Open(b) if b.local == "binding" => {
                        let method = b.require("method")?.to_string();
                        if bindings.iter().any(|x| x.method == method) {
                            return Err(bad(SERVICEBINDINGS, format!("method {method} bound twice")));
                        }
                        let mut binding = ServiceBinding {
                            method,
                            url_template: b.require("url")?.to_string(),
                            inputs: Vec::new(),
                            mime_type: b.attr("mime").unwrap_or("application/octet-stream").to_string(),
                        };
                        if !b.empty {
                            loop {
                                match pull.next_significant()? {
                                    Node::Open(i) if i.local == "input" => {
                                        binding.inputs.push(i.require("key")?.to_string());
                                        if !i.empty {
                                            pull.skip(&i)?;
                                        }
                                    }
                                    Node::Close => break,
                                    _ => return Err(bad(SERVICEBINDINGS, "unexpected content in <binding>")),
                                }
                            }
                        }
                        bindings.push(binding);
                    }
                    Node::Close => break,
                    _ => return Err(bad(SERVICEBINDINGS, "unexpected content in <serviceBindings>")),
                }
            }
        }
        Ok(BMechBinding { pid, bdef, bindings })
    }

    /// Reads the SERVICEBINDINGS datastream of a BMech object.
    pub fn from_object(obj: &DigitalObject, as_of: Option<Timestamp>) -> Result<Self> {
        if !obj.is_bmech() {
            return Err(Error::MissingDependency(format!("{} is not a behavior mechanism", obj.pid)));
        }
        let xml = extract_inline_xml(obj, SERVICEBINDINGS, as_of)
            .map_err(|e| Error::MissingDependency(format!("{}: {e}", obj.pid)))?;
        Self::parse(obj.pid.clone(), &xml)
    }

    pub fn binding(&self, method: &str) -> Option<&ServiceBinding> {
        self.bindings.iter().find(|b| b.method == method)
    }

    /// Every input key used by any binding.
    pub fn input_keys(&self) -> BTreeSet<&str> {
        self.bindings
            .iter()
            .flat_map(|b| b.inputs.iter().map(String::as_str))
            .collect()
    }

    /// Checks the mechanism implements exactly the contract's methods and that
    /// every placeholder names an input key or a method parameter.
    pub fn check_against(&self, contract: &BDefContract) -> Result<()> {
        let problem = |msg: String| Err(Error::InvariantViolation(vec![format!("{}: {msg}", self.pid)]));
        if self.bdef != contract.pid {
            return problem(format!("implements {} not {}", self.bdef, contract.pid));
        }
        for m in &contract.methods {
            if self.binding(&m.name).is_none() {
                return problem(format!("no binding for method {}", m.name));
            }
        }
        for b in &self.bindings {
            let Some(sig) = contract.method(&b.method) else {
                return problem(format!("binds undeclared method {}", b.method));
            };
            for ph in placeholders(&b.url_template) {
                if !b.inputs.iter().any(|i| i == ph) && !sig.params.iter().any(|p| p.name == ph) {
                    return problem(format!("placeholder {{{ph}}} in {} is neither an input nor a parameter", b.method));
                }
            }
        }
        Ok(())
    }

    pub fn to_xml(&self) -> String {
        let mut out = format!("<serviceBindings bdef=\"{}\">\n", escape_attr(&self.bdef.to_string()));
        for b in &self.bindings {
            out.push_str(&format!(
                "  <binding method=\"{}\" url=\"{}\" mime=\"{}\">\n",
                escape_attr(&b.method),
                escape_attr(&b.url_template),
                escape_attr(&b.mime_type)
            ));
            for i in &b.inputs {
                out.push_str(&format!("    <input key=\"{}\"/>\n", escape_attr(i)));
            }
            out.push_str("  </binding>\n");
        }
        out.push_str("</serviceBindings>");
        out
    }
}
