# Domain services 
