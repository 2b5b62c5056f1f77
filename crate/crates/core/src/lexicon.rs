// Copyright 2026 The policy-repair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Fixed vocabulary used to turn wildcard patterns into concrete request
//! values. Changing any table changes generated request suites.

/// Known actions, interleaved by service so strided picks stay varied.
pub const ACTION_CATALOGUE: &[&str] = &[
    "s3:GetObject",
    "ec2:DescribeInstances",
    "iam:GetUser",
    "sqs:SendMessage",
    "dynamodb:GetItem",
    "lambda:InvokeFunction",
    "logs:PutLogEvents",
    "kms:Decrypt",
    "sns:Publish",
    "athena:StartQueryExecution",
    "glue:GetTable",
    "s3:PutObject",
    "ec2:RunInstances",
    "iam:ListRoles",
    "sqs:ReceiveMessage",
    "dynamodb:PutItem",
    "lambda:GetFunction",
    "logs:CreateLogStream",
    "kms:Encrypt",
    "sns:Subscribe",
    "athena:GetQueryResults",
    "glue:GetDatabase",
    "s3:ListBucket",
    "ec2:StartInstances",
    "iam:PassRole",
    "sqs:DeleteMessage",
    "dynamodb:Query",
    "lambda:UpdateFunctionCode",
    "logs:CreateLogGroup",
    "kms:GenerateDataKey",
    "sns:CreateTopic",
    "athena:GetWorkGroup",
    "glue:StartJobRun",
    "s3:DeleteObject",
    "ec2:StopInstances",
    "iam:GetAccountSummary",
    "sqs:GetQueueAttributes",
    "dynamodb:DeleteItem",
    "lambda:ListFunctions",
    "logs:DescribeLogGroups",
    "kms:DescribeKey",
    "sns:ListTopics",
    "cloudwatch:PutMetricData",
    "secretsmanager:GetSecretValue",
    "sts:AssumeRole",
    "rds:DescribeDBInstances",
    "ecr:GetAuthorizationToken",
    "s3:GetBucketLocation",
    "ec2:TerminateInstances",
    "iam:CreateUser",
    "dynamodb:Scan",
    "cloudwatch:GetMetricData",
    "secretsmanager:PutSecretValue",
    "sts:GetCallerIdentity",
    "rds:CreateDBSnapshot",
    "ecr:BatchGetImage",
    "s3:GetObjectTagging",
    "ec2:CreateTags",
    "iam:DeleteRole",
    "dynamodb:UpdateItem",
    "cloudwatch:DescribeAlarms",
    "rds:DeleteDBInstance",
    "ecr:PutImage",
    "s3:PutBucketPolicy",
    "ec2:DescribeVpcs",
    "iam:AttachRolePolicy",
];

/// Stand-ins for a bare `*` resource.
pub const RESOURCE_SAMPLES: &[&str] = &[
    "arn:aws:s3:::example-bucket/data/report.csv",
    "arn:aws:ec2:us-east-1:123456789012:instance/i-0abc123def4567890",
    "arn:aws:sqs:us-east-1:123456789012:orders-queue",
    "arn:aws:dynamodb:us-west-2:123456789012:table/Customers",
    "arn:aws:lambda:us-east-1:123456789012:function:thumbnailer",
    "arn:aws:logs:eu-west-1:123456789012:log-group:/app/web",
    "arn:aws:athena:us-east-1:123456789012:workgroup/primary",
    "arn:aws:kms:us-east-1:123456789012:key/1234abcd-12ab-34cd-56ef-1234567890ab",
];

/// Substitutions for `*` inside resource and principal patterns.
pub const RESOURCE_SEGMENTS: &[&str] = &["data", "reports/2024/summary.csv", "app-01"];

/// Substitutions for `*` inside action patterns with no catalogue match.
pub const ACTION_SEGMENTS: &[&str] = &["Object", "Item", "Resource"];

/// Substitution for `?`.
pub const SINGLE_CHAR: char = 'x';

/// Stand-ins for an absent or `*` principal.
pub const PRINCIPALS: &[&str] = &[
    "arn:aws:iam::123456789012:user/alice",
    "arn:aws:iam::123456789012:user/bob",
    "arn:aws:iam::123456789012:role/app-role",
    "arn:aws:iam::123456789012:user/carol",
    "arn:aws:iam::123456789012:role/ci-deployer",
    "arn:aws:iam::123456789012:user/dave",
    "arn:aws:iam::123456789012:role/analytics",
    "arn:aws:iam::123456789012:root",
];

pub const OUTSIDER_PRINCIPAL: &str = "arn:aws:iam::999999999999:user/outsider";

/// Context key carried by every generated request.
pub const BASE_CONTEXT_KEY: &str = "aws:SourceIp";

pub const SOURCE_IPS: &[&str] = &[
    "10.0.0.1",
    "10.0.0.2",
    "192.168.1.20",
    "172.16.5.4",
    "203.0.113.5",
    "198.51.100.10",
];

pub const UNMATCHED_SOURCE_IP: &str = "198.51.100.77";

pub const UNMATCHED_VALUE: &str = "unmatched-value";

/// Region and account swaps used to perturb resources.
pub const REGION_SWAPS: &[(&str, &str)] = &[
    ("us-east-1", "eu-west-1"),
    ("us-east-2", "eu-west-1"),
    ("us-west-1", "eu-west-1"),
    ("us-west-2", "ap-southeast-2"),
    ("eu-west-1", "us-east-1"),
];
pub const FALLBACK_REGION: &str = "sa-east-1";
pub const ACCOUNT_SWAP: &str = "210987654321";
pub const RESOURCE_SUFFIX: &str = "-restricted";
