# Domain models 
