# darcy preconditioner lab package
